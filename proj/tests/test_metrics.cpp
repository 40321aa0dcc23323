// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "relish/error.hpp"
#include "relish/metrics.hpp"
#include "relish/random.hpp"

namespace relish {
namespace {

using Vec = std::vector<double>;

// Rank by counting: (#strictly smaller) + (#equal + 1) / 2.
Vec counting_ranks(const Vec& v) {
  Vec r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (const double x : v) {
      less += x < v[i];
      equal += x == v[i];
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

// Two-pass textbook correlation in long double.
double reference_correlation(const Vec& a, const Vec& b) {
  long double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= a.size();
  mb /= b.size();
  long double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return static_cast<double>(sab / std::sqrt(saa * sbb));
}

RunRecord rec(std::string dataset, std::string backbone, std::uint64_t seed, double pearson) {
  RunRecord r;
  r.dataset = std::move(dataset);
  r.backbone = std::move(backbone);
  r.seed = seed;
  r.pearson = pearson;
  return r;
}

const MetricSelector kPearson = [](const RunRecord& r) { return r.pearson; };

TEST(Pearson, Examples) {
  const Vec g = {1, 2, 3, 4};
  EXPECT_NEAR(pearson(g, g), 1.0, 1e-15);
  EXPECT_NEAR(pearson(Vec{-1, -2, -3, -4}, g), -1.0, 1e-15);
  EXPECT_NEAR(pearson(Vec{1, 2, 3}, Vec{2, 4, 6}), 1.0, 1e-15);
}

TEST(Pearson, Errors) {
  EXPECT_THROW(pearson(Vec{1, 1, 1}, Vec{1, 2, 3}), DegenerateVarianceError);
  EXPECT_THROW(pearson(Vec{1, 2, 3}, Vec{5, 5, 5}), DegenerateVarianceError);
  EXPECT_THROW(pearson(Vec{1, 2}, Vec{1, 2, 3}), ShapeError);
  EXPECT_THROW(pearson(Vec{1}, Vec{1}), RangeError);
}

TEST(Pearson, PropertyAffineInvariant) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(50);
    Vec a(n), b(n), a2(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = rng.normal(), b[i] = rng.normal();
    const double s = rng.uniform(0.1, 10), c = rng.uniform(-50, 50);
    for (std::size_t i = 0; i < n; ++i) a2[i] = s * a[i] + c;
    ASSERT_NEAR(pearson(a, b), pearson(a2, b), 1e-12);
    ASSERT_NEAR(pearson(a, b), reference_correlation(a, b), 1e-12);
  }
}

TEST(Spearman, Examples) {
  const Vec g = {0.5, 1.5, 2.0, 7.0};
  Vec cubes;
  for (const double x : g) cubes.push_back(x * x * x);
  EXPECT_NEAR(spearman(cubes, g), 1.0, 1e-15);
  EXPECT_NEAR(spearman(Vec{4, 3, 2, 1}, Vec{1, 2, 3, 4}), -1.0, 1e-15);
  EXPECT_NEAR(spearman(Vec{1, 2, 2, 3}, Vec{1, 2, 3, 4}), 0.9486832981, 1e-9);
  EXPECT_EQ(average_ranks(Vec{1, 2, 2, 3}), (Vec{1, 2.5, 2.5, 4}));
}

TEST(Spearman, ExhaustivePermutationsAgainstCountingRanker) {
  const Vec base = {1, 2, 2, 3, 5, 5};
  const Vec golds = {0.3, -1.0, 2.0, 2.0, 4.0, 0.0};
  std::size_t checked = 0;
  for (std::size_t n = 2; n <= 6; ++n) {
    Vec p(base.begin(), base.begin() + static_cast<std::ptrdiff_t>(n));
    const Vec g(golds.begin(), golds.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(p.begin(), p.end());
    do {
      ASSERT_EQ(average_ranks(p), counting_ranks(p));
      const Vec rp = counting_ranks(p), rg = counting_ranks(g);
      const bool flat = std::all_of(rp.begin(), rp.end(), [&](double r) { return r == rp[0]; });
      if (flat) continue;
      ASSERT_NEAR(spearman(p, g), reference_correlation(rp, rg), 1e-12);
      ++checked;
    } while (std::next_permutation(p.begin(), p.end()));
  }
  EXPECT_GT(checked, 200u);
}

TEST(Rmse, Examples) {
  const Vec g = {1, 2, 3};
  EXPECT_EQ(rmse(g, g), 0.0);
  EXPECT_NEAR(rmse(Vec{1.5, 2.5, 3.5}, g), 0.5, 1e-15);
  EXPECT_NEAR(rmse(Vec{-1, 0, 1}, g), 2.0, 1e-15);
  EXPECT_NEAR(nrmse(Vec{1, 2}, Vec{0, 4}, 0, 5), std::sqrt(2.5) / 5, 1e-15);
  EXPECT_NEAR(nrmse(Vec{1, 3}, Vec{0, 2}, 0, 5), 0.2, 1e-15);
  EXPECT_THROW(nrmse(g, g, 2, 2), RangeError);
}

TEST(Rmse, PropertyUnitRangeNrmseEqualsRmse) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(30);
    Vec a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = rng.normal(), b[i] = rng.normal();
    ASSERT_EQ(nrmse(a, b, 0, 1), rmse(a, b));
  }
}

TEST(MacroAggregate, SingleSeed) {
  const std::vector<RunRecord> r = {rec("sts", "m1", 1, 0.8), rec("sick", "m1", 1, 0.6)};
  const AggregateStat s = macro_aggregate(r, kPearson);
  EXPECT_NEAR(s.mean, 0.7, 1e-15);
  EXPECT_EQ(s.stddev, 0.0);
  EXPECT_FALSE(s.stddev_defined);
  EXPECT_EQ(s.seeds.size(), 1u);
}

TEST(MacroAggregate, TwoSeedsSampleStd) {
  const std::vector<RunRecord> r = {rec("sts", "m1", 1, 0.8), rec("sick", "m1", 1, 0.6),
                                    rec("sts", "m1", 2, 0.9), rec("sick", "m1", 2, 0.7)};
  const AggregateStat s = macro_aggregate(r, kPearson);
  EXPECT_NEAR(s.mean, 0.75, 1e-15);
  EXPECT_NEAR(s.stddev, 0.0707106781, 1e-9);
  EXPECT_TRUE(s.stddev_defined);
  EXPECT_EQ(s.per_seed.size(), 2u);
}

TEST(MacroAggregate, ConstantRecordsAndSinglePair) {
  std::vector<RunRecord> r;
  for (std::uint64_t seed : {1, 2, 3}) r.push_back(rec("d", "b", seed, 0.42));
  const AggregateStat s = macro_aggregate(r, kPearson);
  EXPECT_NEAR(s.mean, 0.42, 1e-15);
  EXPECT_NEAR(s.stddev, 0.0, 1e-15);

  const std::vector<RunRecord> one = {rec("d", "b", 1, 0.1), rec("d", "b", 2, 0.5),
                                      rec("d", "b", 3, 0.6)};
  const AggregateStat t = macro_aggregate(one, kPearson);
  EXPECT_NEAR(t.mean, 0.4, 1e-15);
  EXPECT_NEAR(t.stddev, std::sqrt((0.09 + 0.01 + 0.04) / 2), 1e-15);
}

TEST(MacroAggregate, RaggedCoverageThrows) {
  const std::vector<RunRecord> r = {rec("sts", "m1", 1, 0.8), rec("sick", "m1", 1, 0.6),
                                    rec("sts", "m1", 2, 0.9)};
  EXPECT_THROW(macro_aggregate(r, kPearson), CoverageError);
  EXPECT_THROW(macro_aggregate(std::vector<RunRecord>{}, kPearson), CoverageError);
}

TEST(ScoreRun, FillsAllMetrics) {
  const RunRecord r = score_run(Vec{1, 2, 4}, Vec{1, 3, 4}, 0, 5);
  EXPECT_NEAR(r.rmse, std::sqrt(1.0 / 3), 1e-15);
  EXPECT_NEAR(r.nrmse, r.rmse / 5, 1e-15);
  EXPECT_NEAR(r.spearman, 1.0, 1e-15);
  EXPECT_GT(r.pearson, 0.9);
}

}  // namespace
}  // namespace relish
