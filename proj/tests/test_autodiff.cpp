// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "relish/autodiff.hpp"
#include "relish/error.hpp"
#include "relish/gradcheck.hpp"
#include "test_util.hpp"

namespace relish {
namespace {

using testing::random_tensor;

// Reduces any node to a scalar through a fixed random linear map, so every
// output coordinate carries a distinct weight in the loss.
struct Reducer {
  Tensor2d weights;
  Var operator()(Graph<double>& g, Var v) const {
    return g.sum(g.matmul(v, g.constant(weights)));
  }
};

Reducer reducer_for(Rng& rng, std::size_t cols) { return {random_tensor<double>(rng, cols, 1)}; }

void expect_grads(ParamStore<double>& params, const LossBuilder& build, double tol = 1e-8) {
  GradCheckOptions options;
  options.tolerance = tol;
  const GradCheckReport r = grad_check(params, build, options);
  EXPECT_TRUE(r.passed) << "worst " << r.worst_parameter << "[" << r.worst_index
                        << "] analytic " << r.worst_analytic << " numeric " << r.worst_numeric
                        << " rel " << r.max_relative_error;
}

TEST(AutodiffOps, MatmulBothOperands) {
  Rng rng(1);
  ParamStore<double> p;
  p.add("a", random_tensor<double>(rng, 3, 4));
  p.add("b", random_tensor<double>(rng, 4, 2));
  const Reducer red = reducer_for(rng, 2);
  expect_grads(p, [&](Graph<double>& g) { return red(g, g.matmul(g.param("a"), g.param("b"))); });
}

TEST(AutodiffOps, MatmulTransposedRight) {
  Rng rng(2);
  ParamStore<double> p;
  p.add("a", random_tensor<double>(rng, 3, 4));
  p.add("b", random_tensor<double>(rng, 5, 4));
  const Reducer red = reducer_for(rng, 5);
  expect_grads(p, [&](Graph<double>& g) {
    return red(g, g.matmul_nt(g.param("a"), g.param("b")));
  });
}

TEST(AutodiffOps, AddAddRowScale) {
  Rng rng(3);
  ParamStore<double> p;
  p.add("a", random_tensor<double>(rng, 3, 4));
  p.add("b", random_tensor<double>(rng, 3, 4));
  p.add("bias", random_tensor<double>(rng, 1, 4));
  const Reducer red = reducer_for(rng, 4);
  expect_grads(p, [&](Graph<double>& g) {
    const Var s = g.add(g.param("a"), g.scale(g.param("b"), -1.7));
    return red(g, g.add_row(s, g.param("bias")));
  });
}

TEST(AutodiffOps, GeluAndRelu) {
  Rng rng(4);
  ParamStore<double> p;
  p.add("x", random_tensor<double>(rng, 2, 6));
  const Reducer red = reducer_for(rng, 6);
  expect_grads(p, [&](Graph<double>& g) { return red(g, g.gelu(g.param("x"))); });
  expect_grads(p, [&](Graph<double>& g) { return red(g, g.relu(g.param("x"))); });
}

TEST(AutodiffOps, LayerNormAllInputs) {
  Rng rng(5);
  ParamStore<double> p;
  p.add("x", random_tensor<double>(rng, 3, 5));
  p.add("gamma", random_tensor<double>(rng, 1, 5));
  p.add("beta", random_tensor<double>(rng, 1, 5));
  const Reducer red = reducer_for(rng, 5);
  expect_grads(p, [&](Graph<double>& g) {
    return red(g, g.layer_norm(g.param("x"), g.param("gamma"), g.param("beta")));
  });
}

TEST(AutodiffOps, MaskedSoftmaxRows) {
  Rng rng(6);
  ParamStore<double> p;
  p.add("x", random_tensor<double>(rng, 2, 6));
  const Mask mask = {1, 0, 1, 1, 0, 1};
  const Reducer red = reducer_for(rng, 6);
  expect_grads(p, [&](Graph<double>& g) { return red(g, g.masked_softmax(g.param("x"), mask)); });
}

TEST(AutodiffOps, MultiHeadAttention) {
  Rng rng(7);
  ParamStore<double> p;
  p.add("q", random_tensor<double>(rng, 1, 8));
  p.add("k", random_tensor<double>(rng, 5, 8));
  p.add("v", random_tensor<double>(rng, 5, 8));
  const Mask mask = {1, 1, 0, 1, 1};
  const Reducer red = reducer_for(rng, 8);
  for (const std::size_t heads : {1u, 2u, 4u}) {
    expect_grads(p, [&](Graph<double>& g) {
      return red(g, g.attention(g.param("q"), g.param("k"), g.param("v"), mask, heads));
    });
  }
}

// Oracle: per-head softmax(q·kᵀ/sqrt(D/M)) over unmasked keys, then weighted values.
TEST(AutodiffOps, AttentionMatchesPerHeadFormula) {
  Rng rng(8);
  const std::size_t s = 4, d = 6, heads = 3, dk = d / heads;
  const Tensor2d q = random_tensor<double>(rng, 1, d);
  const Tensor2d k = random_tensor<double>(rng, s, d);
  const Tensor2d v = random_tensor<double>(rng, s, d);
  const Mask mask = {1, 0, 1, 1};
  Graph<double> g;
  const Tensor2d out =
      g.value(g.attention(g.constant(q), g.constant(k), g.constant(v), mask, heads));
  for (std::size_t h = 0; h < heads; ++h) {
    std::vector<double> w(s, 0.0);
    double z = 0.0;
    for (std::size_t t = 0; t < s; ++t) {
      if (!mask[t]) continue;
      double dot = 0.0;
      for (std::size_t c = h * dk; c < (h + 1) * dk; ++c) dot += q[c] * k(t, c);
      w[t] = std::exp(dot / std::sqrt(static_cast<double>(dk)));
      z += w[t];
    }
    for (std::size_t c = h * dk; c < (h + 1) * dk; ++c) {
      double expect = 0.0;
      for (std::size_t t = 0; t < s; ++t) expect += w[t] / z * v(t, c);
      EXPECT_NEAR(out[c], expect, 1e-12);
    }
  }
}

TEST(AutodiffOps, HuberAndSquaredError) {
  Rng rng(9);
  ParamStore<double> p;
  p.add("x", random_tensor<double>(rng, 1, 3));
  const Tensor2d w = random_tensor<double>(rng, 3, 1);
  for (const double target : {-5.0, 0.1, 4.0}) {
    expect_grads(p, [&](Graph<double>& g) {
      return g.huber(g.matmul(g.param("x"), g.constant(w)), target, 1.0);
    });
    expect_grads(p, [&](Graph<double>& g) {
      return g.squared_error(g.matmul(g.param("x"), g.constant(w)), target);
    });
  }
}

TEST(Autodiff, SumGivesOnesAndHalfSquaredNormGivesParams) {
  Rng rng(13);
  ParamStore<double> p;
  p.add("p", random_tensor<double>(rng, 1, 5));
  {
    Graph<double> g(&p);
    g.backward(g.sum(g.param("p")));
    for (const double v : p.grad("p").span()) EXPECT_EQ(v, 1.0);
  }
  p.zero_grad();
  {
    Graph<double> g(&p);
    g.backward(g.scale(g.matmul_nt(g.param("p"), g.param("p")), 0.5));
    for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(p.grad("p")[i], p.value("p")[i]);
  }
}

TEST(GradCheck, QuadraticAndSoftmaxComposite) {
  Rng rng(14);
  ParamStore<double> p;
  p.add("p", random_tensor<double>(rng, 1, 6));
  GradCheckOptions strict;
  strict.tolerance = 1e-8;
  const auto quad = grad_check(p, [](Graph<double>& g) {
    return g.scale(g.matmul_nt(g.param("p"), g.param("p")), 0.5);
  }, strict);
  EXPECT_TRUE(quad.passed) << quad.max_relative_error;
  EXPECT_EQ(quad.coordinates, 6u);

  const Tensor2d w = random_tensor<double>(rng, 1, 6);
  const Mask mask = {1, 1, 0, 1, 1, 1};
  const auto comp = grad_check(p, [&](Graph<double>& g) {
    return g.matmul_nt(g.masked_softmax(g.param("p"), mask), g.constant(w));
  });
  EXPECT_LT(comp.max_relative_error, 1e-6);
}

TEST(GradCheck, TamperedGradientIsReportedByName) {
  Rng rng(15);
  ParamStore<double> p;
  p.add("a", random_tensor<double>(rng, 1, 3));
  p.add("b", random_tensor<double>(rng, 1, 3));
  GradCheckOptions options;
  options.tamper = [](ParamStore<double>& s) { s.grad("b")[1] *= -1.0; };
  const auto r = grad_check(p, [](Graph<double>& g) {
    return g.matmul_nt(g.gelu(g.param("a")), g.param("b"));
  }, options);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.worst_parameter, "b");
  EXPECT_EQ(r.worst_index, 1u);
}

TEST(Autodiff, GradientsAccumulateUntilZeroed) {
  ParamStore<double> p;
  p.add("x", Tensor2d(1, 1, 3.0));
  for (int i = 0; i < 2; ++i) {
    Graph<double> g(&p);
    g.backward(g.squared_error(g.param("x"), 1.0));
  }
  EXPECT_DOUBLE_EQ(p.grad("x")[0], 8.0);  // 2 × 2(x − 1)
  p.zero_grad();
  EXPECT_EQ(p.grad("x")[0], 0.0);
}

TEST(Autodiff, BackwardSeedScalesGradients) {
  ParamStore<double> p;
  p.add("x", Tensor2d(1, 1, 3.0));
  Graph<double> g(&p);
  g.backward(g.squared_error(g.param("x"), 1.0), 0.25);
  EXPECT_DOUBLE_EQ(p.grad("x")[0], 1.0);
}

TEST(Autodiff, FrozenGraphMatchesTrainableForward) {
  Rng rng(10);
  ParamStore<double> p;
  p.add("w", random_tensor<double>(rng, 4, 1));
  const Tensor2d x = random_tensor<double>(rng, 1, 4);
  Graph<double> live(&p);
  const double a = live.scalar(live.matmul(live.constant(x), live.param("w")));
  Graph<double> frozen(static_cast<const ParamStore<double>&>(p));
  const Var out = frozen.matmul(frozen.constant(x), frozen.param("w"));
  EXPECT_EQ(frozen.scalar(out), a);
  frozen.backward(frozen.sum(out));
  EXPECT_EQ(p.grad("w")[0], 0.0);
}

TEST(Autodiff, RejectsForeignAndBadHandles) {
  Graph<double> a, b;
  const Var va = a.constant(Tensor2d(1, 1, 1.0));
  EXPECT_THROW((void)b.value(va), InternalError);
  EXPECT_THROW((void)a.value(Var{57, va.graph}), InternalError);
}

TEST(Autodiff, ShapeAndFinitenessErrors) {
  Graph<double> g;
  const Var m = g.constant(Tensor2d(2, 3, 1.0));
  EXPECT_THROW(g.matmul(m, m), ShapeError);
  EXPECT_THROW(g.backward(m), ShapeError);
  const Var big = g.constant(Tensor2d(1, 1, 1e300));
  EXPECT_THROW(g.scale(big, 1e300), EvaluationError);
}

TEST(Autodiff, DropoutIdentityWithoutRngAndScaledWithRng) {
  Graph<double> eval;
  const Var x = eval.constant(Tensor2d(1, 4, 2.0));
  EXPECT_EQ(eval.dropout(x, 0.5).index, x.index);

  Rng rng(12);
  Graph<double> train(nullptr, &rng);
  const Var y = train.dropout(train.constant(Tensor2d(1, 20000, 1.0)), 0.25);
  std::size_t zeros = 0;
  for (const double v : train.value(y).span()) {
    if (v == 0.0) {
      ++zeros;
    } else {
      ASSERT_DOUBLE_EQ(v, 1.0 / 0.75);
    }
  }
  // Binomial(20000, 0.25): sd ≈ 61, allow 5 sd.
  EXPECT_NEAR(static_cast<double>(zeros), 5000.0, 310.0);
}

}  // namespace
}  // namespace relish
