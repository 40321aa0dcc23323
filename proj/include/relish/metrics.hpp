// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace relish {

/// Sample Pearson correlation. Throws DegenerateVarianceError on a constant series.
double pearson(std::span<const double> preds, std::span<const double> golds);

/// Average ranks (1-based); tied values share the mean of their rank span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> preds, std::span<const double> golds);

double rmse(std::span<const double> preds, std::span<const double> golds);

/// RMSE divided by the dataset's nominal gold range y_max − y_min.
double nrmse(std::span<const double> preds, std::span<const double> golds, double y_min,
             double y_max);

struct RunRecord {
  std::string dataset;
  std::string backbone;
  std::string method;
  std::uint64_t seed = 0;
  double pearson = 0.0;
  double spearman = 0.0;
  double rmse = 0.0;
  double nrmse = 0.0;
};

/// Computes all four metrics for one run.
RunRecord score_run(std::span<const double> preds, std::span<const double> golds, double y_min,
                    double y_max);

struct AggregateStat {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n − 1); 0 when only one seed
  bool stddev_defined = false;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed;  // macro mean over (dataset, backbone) pairs
};

using MetricSelector = std::function<double(const RunRecord&)>;

/// Per seed, averages the metric over (dataset, backbone) pairs; then mean and
/// sample std across seeds. Throws CoverageError unless every seed covers the
/// same pairs.
AggregateStat macro_aggregate(std::span<const RunRecord> records, const MetricSelector& metric);

}  // namespace relish
