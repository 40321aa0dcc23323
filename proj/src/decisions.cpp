// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "relish/decisions.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "relish/error.hpp"
#include "relish/random.hpp"

namespace relish {

namespace {

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

// sign? digits* ('.' digits*)? ([eE] sign? digits+)? with at least one mantissa digit.
bool is_decimal(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t mantissa_digits = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++mantissa_digits;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++mantissa_digits;
  }
  if (mantissa_digits == 0) return false;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++exp_digits;
    if (exp_digits == 0) return false;
  }
  return i == s.size();
}

}  // namespace

std::optional<double> try_parse_numeric(std::string_view text) noexcept {
  std::string_view s = trim(text);
  if (!is_decimal(s)) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

double parse_numeric(std::string_view text) {
  if (auto v = try_parse_numeric(text)) return *v;
  throw ParseError("not a number: '" + std::string(text) + "'");
}

std::string format_numeric(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw ParseError("cannot format value");
  return std::string(buf.data(), ptr);
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw RangeError("grid needs step > 0 and hi >= lo");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) grid[i] = lo + static_cast<double>(i) * step;
  return grid;
}

GridDistribution::GridDistribution(std::vector<GridCandidate> candidates,
                                   std::vector<double> probs)
    : candidates_(std::move(candidates)), probs_(std::move(probs)) {
  if (candidates_.empty() || candidates_.size() != probs_.size()) {
    throw ShapeError("grid distribution: " + std::to_string(candidates_.size()) +
                     " candidates vs " + std::to_string(probs_.size()) + " probabilities");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] >= 0.0) || !std::isfinite(probs_[i])) {
      throw RangeError("grid distribution: negative or non-finite probability");
    }
    if (!std::isfinite(candidates_[i].value)) {
      throw RangeError("grid distribution: non-finite candidate value");
    }
    const auto parsed = try_parse_numeric(candidates_[i].text);
    if (!parsed || *parsed != candidates_[i].value) {
      throw ParseError("grid candidate '" + candidates_[i].text + "' does not parse to " +
                       format_numeric(candidates_[i].value));
    }
    total += probs_[i];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw RangeError("grid distribution: probabilities sum to " + format_numeric(total));
  }
}

GridDistribution GridDistribution::from_values(std::span<const double> values,
                                               std::vector<double> probs) {
  std::vector<GridCandidate> candidates;
  candidates.reserve(values.size());
  for (const double v : values) candidates.push_back({format_numeric(v), v});
  return GridDistribution(std::move(candidates), std::move(probs));
}

double ard_decode(const GridDistribution& dist) {
  const auto& c = dist.candidates();
  const auto& p = dist.probs();
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best] || (p[i] == p[best] && c[i].text < c[best].text)) best = i;
  }
  return c[best].value;
}

double rail_grid_mean(const GridDistribution& dist) {
  double mean = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    mean += dist.candidates()[i].value * dist.probs()[i];
  }
  return mean;
}

SampleMean rail_sample_mean(std::span<const std::optional<double>> samples) {
  SampleMean out;
  double total = 0.0;
  for (const auto& s : samples) {
    if (s && std::isfinite(*s)) {
      total += *s;
      ++out.used;
    } else {
      ++out.dropped;
    }
  }
  if (out.used == 0) throw EmptySampleError("no sample parsed as a number");
  out.mean = total / static_cast<double>(out.used);
  return out;
}

SampleMean rail_sample_mean(std::span<const std::string> samples) {
  std::vector<std::optional<double>> parsed;
  parsed.reserve(samples.size());
  for (const auto& s : samples) parsed.push_back(try_parse_numeric(s));
  return rail_sample_mean(std::span<const std::optional<double>>(parsed));
}

double raft_loss(double target, const GridDistribution& dist) {
  const double diff = target - rail_grid_mean(dist);
  return diff * diff;
}

ParamStore<float> GridLogitModel::init_params(std::uint64_t seed) const {
  if (feature_dim == 0 || grid.empty()) {
    throw ConfigError("grid-logit model needs features and a non-empty grid");
  }
  Rng rng(seed);
  const double bound = std::sqrt(1.0 / static_cast<double>(feature_dim));
  ParamStore<float> store;
  store.add(grid_names::kBias, Tensor2f(1, grid.size()));
  Tensor2f w(feature_dim, grid.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<float>(rng.uniform(-bound, bound));
  store.add(grid_names::kWeight, std::move(w));
  return store;
}

template <typename T>
Var grid_logits(Graph<T>& graph, Var features) {
  return graph.add_row(graph.matmul(features, graph.param(grid_names::kWeight)),
                       graph.param(grid_names::kBias));
}

template <typename T>
Var grid_expectation(Graph<T>& graph, Var logits, std::span<const double> grid) {
  const Tensor2<T>& lv = graph.value(logits);
  if (lv.rows() != 1 || lv.cols() != grid.size()) {
    throw ShapeError("grid expectation: logits " + shape_string(lv) + " for " +
                     std::to_string(grid.size()) + " candidates");
  }
  const Mask all(grid.size(), 1);
  const Var probs = graph.masked_softmax(logits, all);
  Tensor2<T> values(1, grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) values[i] = static_cast<T>(grid[i]);
  return graph.matmul_nt(probs, graph.constant(std::move(values)));
}

template <typename T>
Var raft_loss(Graph<T>& graph, Var logits, std::span<const double> grid, T target) {
  return graph.squared_error(grid_expectation(graph, logits, grid), target);
}

template <typename T>
GridDistribution grid_logit_forward(const GridLogitModel& model, const ParamStore<T>& params,
                                    std::span<const T> features) {
  if (features.size() != model.feature_dim) {
    throw ShapeError("grid-logit model expects " + std::to_string(model.feature_dim) +
                     " features, got " + std::to_string(features.size()));
  }
  Graph<T> graph(params);
  const Var x = graph.constant(Tensor2<T>(1, features.size(),
                                          std::vector<T>(features.begin(), features.end())));
  const Var logits = grid_logits(graph, x);
  const Tensor2<T>& lv = graph.value(logits);
  if (lv.cols() != model.grid.size()) {
    throw ShapeError("grid-logit parameters have " + std::to_string(lv.cols()) +
                     " candidates, grid has " + std::to_string(model.grid.size()));
  }
  std::vector<double> logit_values(lv.span().begin(), lv.span().end());
  const Mask all(logit_values.size(), 1);
  std::vector<double> probs = masked_softmax<double>(logit_values, all);
  // Renormalize in double so the 1e-9 sum invariant holds for float logits too.
  double total = 0.0;
  for (const double p : probs) total += p;
  for (double& p : probs) p /= total;
  return GridDistribution::from_values(model.grid, std::move(probs));
}

#define RELISH_INSTANTIATE(T)                                                             \
  template Var grid_logits<T>(Graph<T>&, Var);                                            \
  template Var grid_expectation<T>(Graph<T>&, Var, std::span<const double>);              \
  template Var raft_loss<T>(Graph<T>&, Var, std::span<const double>, T);                  \
  template GridDistribution grid_logit_forward<T>(const GridLogitModel&, const ParamStore<T>&, \
                                                  std::span<const T>);

RELISH_INSTANTIATE(float)
RELISH_INSTANTIATE(double)

#undef RELISH_INSTANTIATE

}  // namespace relish
