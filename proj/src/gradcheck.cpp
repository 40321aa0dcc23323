// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "relish/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "relish/error.hpp"

namespace relish {

namespace {

double evaluate(ParamStore<double>& params, const LossBuilder& build) {
  Graph<double> graph(&params);
  const double value = graph.scalar(build(graph));
  if (!std::isfinite(value)) throw EvaluationError("grad_check: non-finite forward value");
  return value;
}

}  // namespace

GradCheckReport grad_check(ParamStore<double>& params, const LossBuilder& build,
                           const GradCheckOptions& options) {
  params.zero_grad();
  {
    Graph<double> graph(&params);
    const Var loss = build(graph);
    graph.backward(loss);
  }
  if (options.tamper) options.tamper(params);

  GradCheckReport report;
  for (auto& [name, entry] : params.entries()) {
    Tensor2<double>& value = entry.value;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double original = value[i];
      const double h = options.step;
      auto at = [&](double offset) {
        value[i] = original + offset;
        return evaluate(params, build);
      };
      // Fourth-order central stencil; truncation O(h⁴) lets h stay large
      // enough that round-off does not swamp small gradients.
      const double numeric = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
      value[i] = original;
      const double analytic = entry.grad[i];
      const double diff = std::abs(analytic - numeric);
      double rel = 0.0;
      const double scale = std::max(std::abs(analytic), std::abs(numeric));
      if (scale > options.absolute_floor) rel = diff / scale;
      ++report.coordinates;
      if (report.worst_parameter.empty() || rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_parameter = name;
        report.worst_index = i;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_relative_error <= options.tolerance;
  return report;
}

}  // namespace relish
