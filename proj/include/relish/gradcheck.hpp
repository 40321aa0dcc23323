// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "relish/autodiff.hpp"
#include "relish/param_store.hpp"

namespace relish {

struct GradCheckOptions {
  double step = 1e-3;
  double tolerance = 1e-6;
  // Coordinates where both gradient estimates are below this magnitude are
  // skipped. Covers parameters whose true gradient is identically zero (the
  // key bias under single-query softmax), where both sit at round-off level.
  double absolute_floor = 1e-9;
  // Test hook applied to the analytic gradients before comparison.
  std::function<void(ParamStore<double>&)> tamper;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
  bool passed = false;
};

/// Builds the loss on a fresh graph over `params`.
using LossBuilder = std::function<Var(Graph<double>&)>;

/// Compares backward() gradients with fourth-order central differences over
/// every coordinate of every parameter. Per-coordinate relative error is
/// |a − n| / max(|a|, |n|).
GradCheckReport grad_check(ParamStore<double>& params, const LossBuilder& build,
                           const GradCheckOptions& options = {});

}  // namespace relish
