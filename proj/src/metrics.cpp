// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "relish/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <utility>

#include "relish/error.hpp"

namespace relish {

namespace {

void require_paired(std::span<const double> preds, std::span<const double> golds,
                    std::size_t minimum, const char* metric) {
  if (preds.size() != golds.size()) {
    throw ShapeError(std::string(metric) + ": " + std::to_string(preds.size()) +
                     " predictions vs " + std::to_string(golds.size()) + " golds");
  }
  if (preds.size() < minimum) {
    throw RangeError(std::string(metric) + " needs at least " + std::to_string(minimum) +
                     " pairs");
  }
}

}  // namespace

double pearson(std::span<const double> preds, std::span<const double> golds) {
  require_paired(preds, golds, 2, "pearson");
  const double n = static_cast<double>(preds.size());
  const double mp = std::accumulate(preds.begin(), preds.end(), 0.0) / n;
  const double mg = std::accumulate(golds.begin(), golds.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double dx = preds[i] - mp;
    const double dy = golds[i] - mg;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw DegenerateVarianceError("pearson: predictions are constant");
  if (syy == 0.0) throw DegenerateVarianceError("pearson: gold scores are constant");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j (0-based) share ranks i+1..j+1
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> preds, std::span<const double> golds) {
  require_paired(preds, golds, 2, "spearman");
  const std::vector<double> rp = average_ranks(preds);
  const std::vector<double> rg = average_ranks(golds);
  return pearson(rp, rg);
}

double rmse(std::span<const double> preds, std::span<const double> golds) {
  require_paired(preds, golds, 1, "rmse");
  double ss = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double e = preds[i] - golds[i];
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(preds.size()));
}

double nrmse(std::span<const double> preds, std::span<const double> golds, double y_min,
             double y_max) {
  if (!(y_max > y_min)) {
    throw RangeError("nrmse: gold range [" + std::to_string(y_min) + ", " +
                     std::to_string(y_max) + "] is empty");
  }
  return rmse(preds, golds) / (y_max - y_min);
}

RunRecord score_run(std::span<const double> preds, std::span<const double> golds, double y_min,
                    double y_max) {
  RunRecord r;
  r.pearson = pearson(preds, golds);
  r.spearman = spearman(preds, golds);
  r.rmse = rmse(preds, golds);
  r.nrmse = nrmse(preds, golds, y_min, y_max);
  return r;
}

AggregateStat macro_aggregate(std::span<const RunRecord> records, const MetricSelector& metric) {
  if (records.empty()) throw CoverageError("macro_aggregate: no records");
  using Pair = std::pair<std::string, std::string>;
  std::map<std::uint64_t, std::map<Pair, std::vector<double>>> by_seed;
  for (const RunRecord& r : records) {
    by_seed[r.seed][{r.dataset, r.backbone}].push_back(metric(r));
  }

  std::set<Pair> reference;
  for (const auto& [pair, values] : by_seed.begin()->second) reference.insert(pair);

  AggregateStat out;
  for (const auto& [seed, pairs] : by_seed) {
    std::set<Pair> covered;
    for (const auto& [pair, values] : pairs) covered.insert(pair);
    if (covered != reference) {
      throw CoverageError("seed " + std::to_string(seed) +
                          " covers a different set of (dataset, backbone) pairs");
    }
    double total = 0.0;
    for (const auto& [pair, values] : pairs) {
      // Several methods under one pair are averaged before the macro mean.
      total += std::accumulate(values.begin(), values.end(), 0.0) /
               static_cast<double>(values.size());
    }
    out.seeds.push_back(seed);
    out.per_seed.push_back(total / static_cast<double>(pairs.size()));
  }

  const double n = static_cast<double>(out.per_seed.size());
  out.mean = std::accumulate(out.per_seed.begin(), out.per_seed.end(), 0.0) / n;
  if (out.per_seed.size() > 1) {
    double ss = 0.0;
    for (const double a : out.per_seed) ss += (a - out.mean) * (a - out.mean);
    out.stddev = std::sqrt(ss / (n - 1.0));
    out.stddev_defined = true;
  }
  return out;
}

}  // namespace relish
