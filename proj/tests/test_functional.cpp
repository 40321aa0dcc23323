// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "relish/error.hpp"
#include "relish/functional.hpp"
#include "relish/random.hpp"

namespace relish {
namespace {

TEST(MaskedSoftmax, UniformLogitsGiveUniformProbabilities) {
  const std::vector<double> logits = {0.0, 0.0, 0.0, 0.0};
  const Mask mask = {1, 1, 1, 1};
  for (const double p : masked_softmax<double>(logits, mask)) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(MaskedSoftmax, MaskedEntriesAreExactlyZero) {
  const std::vector<double> logits = {1.0, 2.0, 3.0};
  const Mask mask = {1, 0, 1};
  const auto p = masked_softmax<double>(logits, mask);
  EXPECT_EQ(p[1], 0.0);
  const double e = std::exp(2.0);
  EXPECT_NEAR(p[0], 1.0 / (1.0 + e), 1e-15);
  EXPECT_NEAR(p[2], e / (1.0 + e), 1e-15);
}

TEST(MaskedSoftmax, LargeLogitsDoNotOverflow) {
  const std::vector<float> logits = {1000.0f, 999.0f};
  const Mask mask = {1, 1};
  const auto p = masked_softmax<float>(logits, mask);
  EXPECT_TRUE(std::isfinite(p[0]) && std::isfinite(p[1]));
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-6);
}

TEST(MaskedSoftmax, ErrorsOnEmptySupportAndLengthMismatch) {
  const std::vector<double> logits = {1.0, 2.0};
  EXPECT_THROW(masked_softmax<double>(logits, Mask{0, 0}), EmptySupportError);
  EXPECT_THROW(masked_softmax<double>(logits, Mask{1}), ShapeError);
}

TEST(MaskedSoftmax, PropertyNormalizedNonNegativeAndShiftInvariant) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<double> logits(n);
    Mask mask(n);
    for (std::size_t i = 0; i < n; ++i) {
      logits[i] = rng.uniform(-30.0, 30.0);
      mask[i] = rng.uniform01() < 0.7 ? 1 : 0;
    }
    mask[rng.below(n)] = 1;
    const auto p = masked_softmax<double>(logits, mask);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    ASSERT_NEAR(total, 1.0, 1e-12);
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_GE(p[i], 0.0);
      if (mask[i] == 0) {
        ASSERT_EQ(p[i], 0.0);
      }
    }
    std::vector<double> shifted = logits;
    const double c = rng.uniform(-100.0, 100.0);
    for (double& v : shifted) v += c;
    const auto q = masked_softmax<double>(shifted, mask);
    for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(p[i], q[i], 1e-12);
  }
}

TEST(LayerNorm, StandardizesThenAffine) {
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> gamma = {1.0, 1.0, 1.0, 1.0};
  const std::vector<double> beta = {0.0, 0.0, 0.0, 0.0};
  const auto y = layer_norm<double>(x, gamma, beta, 0.0);
  // mean 2.5, population variance 1.25
  const double sd = std::sqrt(1.25);
  EXPECT_NEAR(y[0], -1.5 / sd, 1e-12);
  EXPECT_NEAR(y[3], 1.5 / sd, 1e-12);

  const std::vector<double> g2 = {2.0, 2.0, 2.0, 2.0};
  const std::vector<double> b2 = {1.0, 1.0, 1.0, 1.0};
  const auto z = layer_norm<double>(x, g2, b2, 0.0);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(z[i], 2.0 * y[i] + 1.0, 1e-12);
}

TEST(LayerNorm, ConstantInputMapsToBeta) {
  const std::vector<double> x(5, 3.0), gamma(5, 2.0), beta(5, 0.5);
  for (const double v : layer_norm<double>(x, gamma, beta)) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Gelu, ExactErfForm) {
  EXPECT_EQ(gelu(0.0), 0.0);
  for (const double x : {-3.0, -1.0, -0.1, 0.5, 2.0}) {
    EXPECT_NEAR(gelu(x), 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))), 1e-15);
    const double h = 1e-6;
    EXPECT_NEAR(gelu_derivative(x), (gelu(x + h) - gelu(x - h)) / (2 * h), 1e-8);
  }
}

TEST(Huber, QuadraticInsideLinearOutside) {
  EXPECT_DOUBLE_EQ(huber_loss(0.5, 0.0, 1.0), 0.125);
  EXPECT_DOUBLE_EQ(huber_loss(3.0, 0.0, 1.0), 2.5);
  EXPECT_DOUBLE_EQ(huber_loss(-3.0, 0.0, 1.0), 2.5);
  EXPECT_DOUBLE_EQ(huber_derivative(0.5, 0.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(huber_derivative(3.0, 0.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(huber_derivative(-3.0, 0.0, 1.0), -1.0);
  // continuous at the switch point
  EXPECT_NEAR(huber_loss(1.0 + 1e-12, 0.0, 1.0), huber_loss(1.0 - 1e-12, 0.0, 1.0), 1e-11);
}

TEST(MaskedSoftmax, DocumentedExamples) {
  const auto a = masked_softmax<double>(std::vector<double>{0.0, 0.0}, Mask{1, 1});
  EXPECT_DOUBLE_EQ(a[0], 0.5);
  EXPECT_DOUBLE_EQ(a[1], 0.5);
  const auto b = masked_softmax<double>(std::vector<double>{1.0, 2.0, 3.0}, Mask{1, 1, 0});
  EXPECT_NEAR(b[0], 0.26894142137, 1e-10);
  EXPECT_NEAR(b[1], 0.73105857863, 1e-10);
  EXPECT_EQ(b[2], 0.0);
  const auto c = masked_softmax<double>(std::vector<double>{5.0}, Mask{1});
  EXPECT_EQ(c[0], 1.0);
}

TEST(LayerNorm, DocumentedExamples) {
  const std::vector<double> ones3(3, 1.0), zeros3(3, 0.0);
  for (const double v : layer_norm<double>(ones3, std::vector<double>{3.0, -2.0, 7.0}, zeros3)) {
    EXPECT_NEAR(v, 0.0, 1e-12);
  }
  const auto a = layer_norm<double>(std::vector<double>{1.0, -1.0}, std::vector<double>{1.0, 1.0},
                                    std::vector<double>{0.0, 0.0}, 0.0);
  EXPECT_NEAR(a[0], 1.0, 1e-12);
  EXPECT_NEAR(a[1], -1.0, 1e-12);
  const auto b = layer_norm<double>(std::vector<double>{0.0, 2.0, 4.0}, std::vector<double>(3, 1.0),
                                    zeros3, 0.0);
  EXPECT_NEAR(b[0], -1.2247448714, 1e-9);
  EXPECT_NEAR(b[1], 0.0, 1e-12);
  EXPECT_NEAR(b[2], 1.2247448714, 1e-9);
}

TEST(Gelu, DocumentedExamples) {
  EXPECT_NEAR(gelu(10.0), 10.0, 1e-9);
  EXPECT_NEAR(gelu(1.0), 0.8413447461, 1e-9);
}

TEST(Huber, DocumentedExamples) {
  EXPECT_EQ(huber_loss(0.0, 0.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(huber_loss(2.5, 0.5, 1.0), 1.5);
}

}  // namespace
}  // namespace relish
