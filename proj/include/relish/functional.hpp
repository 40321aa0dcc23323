// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

// Value-level building blocks shared by the tape ops and the public API.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace relish {

/// Token validity mask: 1 = attendable, 0 = padding.
using Mask = std::vector<std::uint8_t>;

/// Stand-in for -inf on masked logits.
inline constexpr double kMaskedLogit = -1e30;

inline constexpr double kLayerNormEps = 1e-5;

/// Softmax restricted to mask==1 entries. Masked outputs are exactly zero.
/// Throws EmptySupportError when no entry is unmasked.
template <typename T>
std::vector<T> masked_softmax(std::span<const T> logits, std::span<const std::uint8_t> mask);

/// gamma ⊙ (x − mean) / sqrt(var + eps) + beta with population variance.
template <typename T>
std::vector<T> layer_norm(std::span<const T> x, std::span<const T> gamma,
                          std::span<const T> beta, T eps = static_cast<T>(kLayerNormEps));

/// Exact GELU, x·Φ(x).
template <typename T>
T gelu(T x);

/// dGELU/dx = Φ(x) + x·φ(x).
template <typename T>
T gelu_derivative(T x);

/// ½r² inside |r| ≤ delta, delta(|r| − ½delta) outside.
template <typename T>
T huber_loss(T prediction, T target, T delta);

/// ∂huber/∂prediction.
template <typename T>
T huber_derivative(T prediction, T target, T delta);

}  // namespace relish
