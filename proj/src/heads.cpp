// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "relish/heads.hpp"

#include <cmath>
#include <limits>

#include "relish/error.hpp"
#include "relish/random.hpp"

namespace relish {

template <typename T>
Tensor2<T> masked_mean_pool(const Tensor2<T>& states, std::span<const std::uint8_t> mask) {
  if (mask.size() != states.rows()) {
    throw ShapeError("mean pool: mask length " + std::to_string(mask.size()) + " for " +
                     std::to_string(states.rows()) + " tokens");
  }
  Tensor2<T> out(1, states.cols());
  std::size_t count = 0;
  for (std::size_t t = 0; t < states.rows(); ++t) {
    if (mask[t] == 0) continue;
    ++count;
    for (std::size_t c = 0; c < states.cols(); ++c) out[c] += states(t, c);
  }
  if (count == 0) throw EmptySupportError("mean pool: every token is masked");
  const T denom = static_cast<T>(count);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] /= denom;
  return out;
}

std::size_t mlp_parameter_count(std::size_t input_dim, std::size_t hidden) {
  return hidden * hidden + hidden * (input_dim + 3) + 1;
}

std::size_t match_mlp_hidden(std::size_t input_dim, std::size_t target_params) {
  if (input_dim == 0) throw MatchingError("input dimension must be positive");
  if (target_params < input_dim + 5) {
    throw MatchingError("target " + std::to_string(target_params) +
                        " is below the smallest MLP (" + std::to_string(input_dim + 5) + ")");
  }
  auto distance = [&](std::size_t h) {
    const std::size_t count = mlp_parameter_count(input_dim, h);
    return count > target_params ? count - target_params : target_params - count;
  };
  std::size_t best = 0;
  std::size_t best_distance = std::numeric_limits<std::size_t>::max();
  // The count is increasing in h, so stop once we overshoot the target.
  for (std::size_t h = 64;; h += 64) {
    const std::size_t dist = distance(h);
    if (dist < best_distance) {
      best = h;
      best_distance = dist;
    }
    if (mlp_parameter_count(input_dim, h) >= target_params) break;
  }
  if (best == 0) throw MatchingError("no admissible hidden size");
  return best;
}

namespace {

Tensor2f uniform_weight(Rng& rng, std::size_t rows, std::size_t cols, std::size_t fan_in) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  Tensor2f t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

}  // namespace

ParamStore<float> init_linear_params(std::size_t input_dim, std::uint64_t seed) {
  using namespace head_names;
  if (input_dim == 0) throw ConfigError("linear head needs a positive input dimension");
  Rng rng(seed);
  ParamStore<float> store;
  store.add(kLinearBias, Tensor2f(1, 1));
  store.add(kLinearWeight, uniform_weight(rng, 1, input_dim, input_dim));
  return store;
}

ParamStore<float> init_mlp_params(const MlpHeadConfig& config, std::uint64_t seed) {
  using namespace head_names;
  if (config.input_dim == 0 || config.hidden == 0) {
    throw ConfigError("MLP head needs positive input and hidden sizes");
  }
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) {
    throw ConfigError("MLP dropout must lie in [0, 1)");
  }
  const std::size_t d = config.input_dim, h = config.hidden;
  Rng rng(seed);
  ParamStore<float> store;
  store.add(kMlpFc1Weight, uniform_weight(rng, d, h, d));
  store.add(kMlpFc1Bias, Tensor2f(1, h));
  store.add(kMlpFc2Weight, uniform_weight(rng, h, h, h));
  store.add(kMlpFc2Bias, Tensor2f(1, h));
  store.add(kMlpFc3Weight, uniform_weight(rng, h, 1, h));
  store.add(kMlpFc3Bias, Tensor2f(1, 1));
  return store;
}

template <typename T>
T linear_head_value(std::span<const T> pooled, std::span<const T> weight, T bias) {
  if (pooled.size() != weight.size()) {
    throw ShapeError("linear head: input length " + std::to_string(pooled.size()) +
                     " vs weight length " + std::to_string(weight.size()));
  }
  T acc{0};
  for (std::size_t i = 0; i < pooled.size(); ++i) acc += pooled[i] * weight[i];
  return acc + bias;
}

template <typename T>
Var linear_head_forward(Graph<T>& graph, Var pooled) {
  using namespace head_names;
  return graph.add_row(graph.matmul_nt(pooled, graph.param(kLinearWeight)),
                       graph.param(kLinearBias));
}

template <typename T>
Var mlp_head_forward(Graph<T>& graph, Var pooled, double dropout) {
  using namespace head_names;
  const T rate = static_cast<T>(dropout);
  auto layer = [&](Var x, const char* weight, const char* bias) {
    return graph.add_row(graph.matmul(x, graph.param(weight)), graph.param(bias));
  };
  const Var u1 = graph.dropout(graph.relu(layer(pooled, kMlpFc1Weight, kMlpFc1Bias)), rate);
  const Var u2 = graph.dropout(graph.relu(layer(u1, kMlpFc2Weight, kMlpFc2Bias)), rate);
  return layer(u2, kMlpFc3Weight, kMlpFc3Bias);
}

#define RELISH_INSTANTIATE(T)                                                                  \
  template Tensor2<T> masked_mean_pool<T>(const Tensor2<T>&, std::span<const std::uint8_t>);   \
  template T linear_head_value<T>(std::span<const T>, std::span<const T>, T);                  \
  template Var linear_head_forward<T>(Graph<T>&, Var);                                         \
  template Var mlp_head_forward<T>(Graph<T>&, Var, double);

RELISH_INSTANTIATE(float)
RELISH_INSTANTIATE(double)

#undef RELISH_INSTANTIATE

}  // namespace relish
