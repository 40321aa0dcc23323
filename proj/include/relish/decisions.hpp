// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

// Decision rules over an explicit distribution on numeric strings:
// string argmax (ARD), posterior mean (RAIL) and the squared-error-of-the-mean
// training loss (RAFT), plus a small grid-logit model that produces such
// distributions from features.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relish/autodiff.hpp"
#include "relish/param_store.hpp"

namespace relish {

/// Strict decimal parse after trimming whitespace: optional sign, digits,
/// optional fraction and exponent. Throws ParseError otherwise.
double parse_numeric(std::string_view text);
std::optional<double> try_parse_numeric(std::string_view text) noexcept;

struct GridCandidate {
  std::string text;
  double value = 0.0;
};

class GridDistribution {
 public:
  /// Validates probabilities (≥ 0, sum 1 ± 1e-9), finiteness and that each
  /// candidate string parses to its paired value.
  GridDistribution(std::vector<GridCandidate> candidates, std::vector<double> probs);

  /// Candidates built from values; text uses the shortest round-trip form.
  static GridDistribution from_values(std::span<const double> values,
                                      std::vector<double> probs);

  [[nodiscard]] const std::vector<GridCandidate>& candidates() const noexcept {
    return candidates_;
  }
  [[nodiscard]] const std::vector<double>& probs() const noexcept { return probs_; }
  [[nodiscard]] std::size_t size() const noexcept { return probs_.size(); }

 private:
  std::vector<GridCandidate> candidates_;
  std::vector<double> probs_;
};

/// Shortest decimal text that parses back to `value`.
std::string format_numeric(double value);

/// Evenly spaced candidates lo, lo+step, ..., hi.
std::vector<double> make_grid(double lo, double hi, double step);

/// Value of the most probable string; exact ties go to the lexicographically smallest text.
double ard_decode(const GridDistribution& dist);

/// Σ value·prob.
double rail_grid_mean(const GridDistribution& dist);

struct SampleMean {
  double mean = 0.0;
  std::size_t used = 0;
  std::size_t dropped = 0;
};

/// Mean of the samples that parsed; unparseable ones are dropped and counted.
/// Throws EmptySampleError when nothing parsed.
SampleMean rail_sample_mean(std::span<const std::optional<double>> samples);
SampleMean rail_sample_mean(std::span<const std::string> samples);

/// (y* − E[value])².
double raft_loss(double target, const GridDistribution& dist);

namespace grid_names {
inline constexpr const char* kWeight = "grid.weight";  // d_f×K
inline constexpr const char* kBias = "grid.bias";      // 1×K
}  // namespace grid_names

/// Per-candidate logits = features·W + b.
struct GridLogitModel {
  std::size_t feature_dim = 0;
  std::vector<double> grid;

  [[nodiscard]] ParamStore<float> init_params(std::uint64_t seed) const;
};

/// Softmax over the model's logits for one feature vector.
template <typename T>
GridDistribution grid_logit_forward(const GridLogitModel& model, const ParamStore<T>& params,
                                    std::span<const T> features);

/// 1×K logit node.
template <typename T>
Var grid_logits(Graph<T>& graph, Var features);

/// 1×1 node holding E_p[value] for p = softmax(logits).
template <typename T>
Var grid_expectation(Graph<T>& graph, Var logits, std::span<const double> grid);

/// 1×1 RAFT loss node (target − E_p[value])².
template <typename T>
Var raft_loss(Graph<T>& graph, Var logits, std::span<const double> grid, T target);

}  // namespace relish
