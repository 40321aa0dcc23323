// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

// Iterative latent-state regression head.
//
//   X     = H·W + b_proj                                  token memory, S×d_h
//   r⁰    = learned latent (1×d_h)
//   r̃ⁱ    = LN₁(rⁱ⁻¹ + Drop(MHA(rⁱ⁻¹, X, X)·W_O + b_O))
//   rⁱ    = LN₂(r̃ⁱ + W₂·Drop(GELU(W₁·r̃ⁱ + b₁)) + b₂)
//   ẑ     = w·rᴸ + b
//
// MHA uses fused Q/K/V projections (d_h×d_h plus bias) split into M heads,
// with per-head softmax scale 1/sqrt(d_h/M) and attention restricted to
// unmasked tokens.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relish/autodiff.hpp"
#include "relish/functional.hpp"
#include "relish/param_store.hpp"
#include "relish/tensor.hpp"

namespace relish {

struct RelishConfig {
  std::size_t input_dim = 0;  // backbone hidden size d
  std::size_t head_dim = 256;
  std::size_t heads = 8;
  std::size_t layers = 3;
  std::size_t ffn_hidden = 1024;
  double dropout = 0.1;
  double huber_delta = 1.0;

  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

/// One example's backbone hidden states.
struct TokenStates {
  Tensor2f states;  // S×d
  Mask mask;        // length S
  std::string id;
  std::optional<double> target;

  [[nodiscard]] std::size_t length() const noexcept { return states.rows(); }
  [[nodiscard]] std::size_t dim() const noexcept { return states.cols(); }
  /// Throws ShapeError/EmptySupportError when S, mask or d are inconsistent.
  void validate(std::size_t expected_dim = 0) const;
};

/// Training-split target standardization.
struct TargetNormalizer {
  double mean = 0.0;
  double stddev = 1.0;  // population standard deviation
  double eps = 1e-8;

  static TargetNormalizer fit(std::span<const double> train_targets, double eps = 1e-8);
  [[nodiscard]] double normalize(double y) const { return (y - mean) / (stddev + eps); }
  [[nodiscard]] double denormalize(double z) const { return z * (stddev + eps) + mean; }
};

/// Trainable parameter total of the head. `with_projection = false` is the
/// d_h = d variant that drops W and b_proj.
[[nodiscard]] std::size_t count_parameters(const RelishConfig& config,
                                           bool with_projection = true);

/// Parameter names in the ParamStore layout used by the head.
namespace relish_names {
inline constexpr const char* kProjWeight = "proj.weight";
inline constexpr const char* kProjBias = "proj.bias";
inline constexpr const char* kLatent = "latent";
inline constexpr const char* kOutWeight = "out.weight";
inline constexpr const char* kOutBias = "out.bias";
std::string block(std::size_t index, const char* leaf);
}  // namespace relish_names

/// Weights ~ U(±sqrt(1/fan_in)), biases 0, LN gamma 1 / beta 0, latent ~ U(±0.1).
/// Values are drawn in name order from Rng(seed).
[[nodiscard]] ParamStore<float> init_relish_params(const RelishConfig& config,
                                                   std::uint64_t seed);

/// X = H·W + b_proj.
template <typename T>
Var project_tokens(Graph<T>& graph, Var states);

/// One refinement block applied to the latent state.
template <typename T>
Var refine_step(Graph<T>& graph, Var latent, Var memory, std::span<const std::uint8_t> mask,
                std::size_t block, const RelishConfig& config);

/// Full head on one example; returns the 1×1 standardized prediction.
/// Dropout is active iff the graph carries a dropout RNG.
template <typename T>
Var relish_forward(Graph<T>& graph, const Tensor2<T>& states,
                   std::span<const std::uint8_t> mask, const RelishConfig& config);

/// Evaluation-mode prediction ẑ (no dropout, no gradient bookkeeping).
template <typename T>
T relish_predict(const ParamStore<T>& params, const Tensor2<T>& states,
                 std::span<const std::uint8_t> mask, const RelishConfig& config);

}  // namespace relish
