// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

// Mean-pooling baselines: a linear probe and a 2-layer ReLU MLP.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "relish/autodiff.hpp"
#include "relish/param_store.hpp"
#include "relish/relish_head.hpp"

namespace relish {

/// Σ m_t H_t / Σ m_t as a 1×d row.
template <typename T>
Tensor2<T> masked_mean_pool(const Tensor2<T>& states, std::span<const std::uint8_t> mask);

namespace head_names {
inline constexpr const char* kLinearWeight = "linear.weight";  // 1×d
inline constexpr const char* kLinearBias = "linear.bias";      // 1×1
inline constexpr const char* kMlpFc1Weight = "mlp.fc1.weight";  // d×h
inline constexpr const char* kMlpFc1Bias = "mlp.fc1.bias";
inline constexpr const char* kMlpFc2Weight = "mlp.fc2.weight";  // h×h
inline constexpr const char* kMlpFc2Bias = "mlp.fc2.bias";
inline constexpr const char* kMlpFc3Weight = "mlp.fc3.weight";  // h×1
inline constexpr const char* kMlpFc3Bias = "mlp.fc3.bias";
}  // namespace head_names

struct MlpHeadConfig {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  double dropout = 0.1;
};

/// h² + h(d + 3) + 1.
[[nodiscard]] std::size_t mlp_parameter_count(std::size_t input_dim, std::size_t hidden);

/// Multiple of 64 whose MLP parameter count is closest to `target_params`
/// (ties go to the smaller width).
[[nodiscard]] std::size_t match_mlp_hidden(std::size_t input_dim, std::size_t target_params);

[[nodiscard]] ParamStore<float> init_linear_params(std::size_t input_dim, std::uint64_t seed);
[[nodiscard]] ParamStore<float> init_mlp_params(const MlpHeadConfig& config, std::uint64_t seed);

/// ẑ = w·h̄ + b on plain vectors.
template <typename T>
T linear_head_value(std::span<const T> pooled, std::span<const T> weight, T bias);

/// ẑ = w·h̄ + b on a pooled 1×d input node.
template <typename T>
Var linear_head_forward(Graph<T>& graph, Var pooled);

/// Two Drop(ReLU(affine)) layers followed by an affine scalar output.
template <typename T>
Var mlp_head_forward(Graph<T>& graph, Var pooled, double dropout);

}  // namespace relish
