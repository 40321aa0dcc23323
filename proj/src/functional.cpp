// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "relish/functional.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "relish/error.hpp"

namespace relish {

template <typename T>
std::vector<T> masked_softmax(std::span<const T> logits, std::span<const std::uint8_t> mask) {
  if (logits.size() != mask.size()) {
    throw ShapeError("masked_softmax: " + std::to_string(logits.size()) + " logits vs " +
                     std::to_string(mask.size()) + " mask entries");
  }
  const T masked = static_cast<T>(kMaskedLogit);
  T max_logit = masked;
  bool any = false;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i] != 0) {
      any = true;
      max_logit = std::max(max_logit, logits[i]);
    }
  }
  if (!any) throw EmptySupportError("masked_softmax: every position is masked");

  std::vector<T> out(logits.size(), T{0});
  T total{0};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const T shifted = (mask[i] != 0 ? logits[i] : masked) - max_logit;
    const T e = mask[i] != 0 ? std::exp(shifted) : T{0};
    out[i] = e;
    total += e;
  }
  for (T& v : out) v /= total;
  return out;
}

template <typename T>
std::vector<T> layer_norm(std::span<const T> x, std::span<const T> gamma,
                          std::span<const T> beta, T eps) {
  if (x.size() != gamma.size() || x.size() != beta.size()) {
    throw ShapeError("layer_norm: length mismatch");
  }
  if (x.empty()) return {};
  const T n = static_cast<T>(x.size());
  T mean{0};
  for (const T v : x) mean += v;
  mean /= n;
  T var{0};
  for (const T v : x) var += (v - mean) * (v - mean);
  var /= n;
  const T inv_std = T{1} / std::sqrt(var + eps);
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = gamma[i] * (x[i] - mean) * inv_std + beta[i];
  }
  return out;
}

template <typename T>
T gelu(T x) {
  return T{0.5} * x * (T{1} + std::erf(x / std::numbers::sqrt2_v<T>));
}

template <typename T>
T gelu_derivative(T x) {
  const T cdf = T{0.5} * (T{1} + std::erf(x / std::numbers::sqrt2_v<T>));
  const T pdf = std::exp(T{-0.5} * x * x) * std::numbers::inv_sqrtpi_v<T> /
                std::numbers::sqrt2_v<T>;
  return cdf + x * pdf;
}

template <typename T>
T huber_loss(T prediction, T target, T delta) {
  const T r = std::abs(prediction - target);
  if (r <= delta) return T{0.5} * r * r;
  return delta * (r - T{0.5} * delta);
}

template <typename T>
T huber_derivative(T prediction, T target, T delta) {
  const T r = prediction - target;
  if (std::abs(r) <= delta) return r;
  return r > T{0} ? delta : -delta;
}

#define RELISH_INSTANTIATE(T)                                                               \
  template std::vector<T> masked_softmax<T>(std::span<const T>, std::span<const std::uint8_t>); \
  template std::vector<T> layer_norm<T>(std::span<const T>, std::span<const T>,              \
                                        std::span<const T>, T);                              \
  template T gelu<T>(T);                                                                     \
  template T gelu_derivative<T>(T);                                                          \
  template T huber_loss<T>(T, T, T);                                                         \
  template T huber_derivative<T>(T, T, T);

RELISH_INSTANTIATE(float)
RELISH_INSTANTIATE(double)

#undef RELISH_INSTANTIATE

}  // namespace relish
