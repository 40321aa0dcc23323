// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "relish/error.hpp"
#include "relish/optim.hpp"

namespace relish {
namespace {

ParamStore<double> single(std::vector<double> values) {
  ParamStore<double> p;
  const std::size_t n = values.size();
  p.add("w", Tensor2d(1, n, std::move(values)));
  return p;
}

TEST(AdamW, ZeroGradientOnlyDecays) {
  ParamStore<double> p = single({1.0, -2.0, 0.5});
  AdamW<double> opt;
  const double lr = 3e-4;
  opt.step(p, lr);
  const double f = 1.0 - lr * 0.01;
  EXPECT_DOUBLE_EQ(p.value("w")[0], 1.0 * f);
  EXPECT_DOUBLE_EQ(p.value("w")[1], -2.0 * f);
  EXPECT_DOUBLE_EQ(p.value("w")[2], 0.5 * f);
}

TEST(AdamW, FirstStepMovesBySignTimesLr) {
  AdamWOptions o;
  o.weight_decay = 0.0;
  for (const double g : {1e-3, 0.7, -25.0}) {
    ParamStore<double> p = single({0.0});
    p.grad("w")[0] = g;
    AdamW<double> opt(o);
    opt.step(p, 1e-3);
    EXPECT_NEAR(p.value("w")[0], -1e-3 * std::copysign(1.0, g), 1e-3 * 1e-4);
  }
}

// Textbook form with explicit bias-corrected moments.
struct ReferenceAdamW {
  double m = 0, v = 0;
  int t = 0;
  double step(double p, double g, double lr, double wd) {
    ++t;
    p -= lr * wd * p;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - std::pow(0.9, t));
    const double vhat = v / (1.0 - std::pow(0.999, t));
    return p - lr * mhat / (std::sqrt(vhat) + 1e-8);
  }
};

TEST(AdamW, TwoStepsMatchReference) {
  ParamStore<double> p = single({0.3, -1.1});
  const double grads[2] = {0.25, -4.0};
  ReferenceAdamW ref[2];
  double expect[2] = {0.3, -1.1};
  AdamW<double> opt;
  for (const double lr : {1e-2, 5e-3}) {
    for (int i = 0; i < 2; ++i) {
      p.grad("w")[i] = grads[i];
      expect[i] = ref[i].step(expect[i], grads[i], lr, 0.01);
    }
    opt.step(p, lr);
  }
  EXPECT_EQ(opt.steps(), 2u);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(p.value("w")[i], expect[i], 1e-12);
}

TEST(AdamW, RejectsNegativeLearningRate) {
  ParamStore<double> p = single({1.0});
  AdamW<double> opt;
  EXPECT_THROW(opt.step(p, -1.0), RangeError);
}

TEST(Schedule, WarmupPeakAndDecay) {
  const LinearWarmupSchedule s(1e-4, 100, 0.1);
  EXPECT_EQ(s.warmup_steps(), 10u);
  EXPECT_DOUBLE_EQ(s.lr_at(1), 1e-5);
  EXPECT_DOUBLE_EQ(s.lr_at(10), 1e-4);
  EXPECT_DOUBLE_EQ(s.lr_at(55), 5e-5);
  EXPECT_EQ(s.lr_at(100), 0.0);
}

TEST(Schedule, PropertyNonNegativeUnimodal) {
  for (const std::size_t total : {1u, 7u, 33u, 1000u}) {
    const LinearWarmupSchedule s(2e-3, total);
    double prev = 0.0;
    bool falling = false;
    for (std::size_t t = 1; t <= total; ++t) {
      const double lr = s.lr_at(t);
      ASSERT_GE(lr, 0.0);
      ASSERT_LE(lr, 2e-3 + 1e-18);
      if (lr < prev) falling = true;
      if (falling) {
        ASSERT_LE(lr, prev);
      }
      prev = lr;
    }
  }
}

TEST(Schedule, OutOfRangeStepsThrow) {
  const LinearWarmupSchedule s(1e-4, 100);
  EXPECT_THROW((void)s.lr_at(0), RangeError);
  EXPECT_THROW((void)s.lr_at(101), RangeError);
  EXPECT_THROW(LinearWarmupSchedule(1e-4, 0), RangeError);
}

}  // namespace
}  // namespace relish
