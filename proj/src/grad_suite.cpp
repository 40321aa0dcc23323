// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "relish/grad_suite.hpp"

#include <algorithm>

#include "relish/decisions.hpp"
#include "relish/error.hpp"
#include "relish/heads.hpp"
#include "relish/random.hpp"
#include "relish/relish_head.hpp"

namespace relish {

GradSuitePreset grad_preset(std::string_view name) {
  GradSuitePreset p;
  if (name == "default") return p;
  if (name == "deep") {
    p.name = "deep";
    p.layers = 5;
    return p;
  }
  throw ConfigError("unknown gradcheck preset '" + std::string(name) +
                    "' (expected default or deep)");
}

GradFault parse_grad_fault(std::string_view text) {
  if (text.empty() || text == "none") return GradFault::kNone;
  if (text == "ffn-sign") return GradFault::kFfnSign;
  throw ConfigError("unknown fault '" + std::string(text) + "' (expected ffn-sign)");
}

bool GradSuiteResult::passed() const {
  return std::all_of(cases.begin(), cases.end(), [](const GradCase& c) {
    return c.report.max_relative_error <= c.tolerance;
  });
}

namespace {

Tensor2d gaussian(Rng& rng, std::size_t rows, std::size_t cols) {
  Tensor2d t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

// Moves parameters off their structured init (zero biases, unit gammas) so
// every path carries a generic gradient.
ParamStore<double> jitter(const ParamStore<float>& init, Rng& rng) {
  ParamStore<double> params = init.cast<double>();
  for (auto& [name, entry] : params.entries()) {
    for (std::size_t i = 0; i < entry.value.size(); ++i) entry.value[i] += 0.1 * rng.normal();
  }
  return params;
}

GradCase check(std::string name, double tolerance, ParamStore<double>& params,
               const LossBuilder& build, const GradCheckOptions& base) {
  GradCheckOptions options = base;
  options.tolerance = tolerance;
  GradCase c{std::move(name), tolerance, grad_check(params, build, options)};
  return c;
}

}  // namespace

GradSuiteResult run_grad_suite(const GradSuitePreset& preset, GradFault fault) {
  RelishConfig config;
  config.input_dim = preset.input_dim;
  config.head_dim = preset.head_dim;
  config.heads = preset.heads;
  config.layers = preset.layers;
  config.ffn_hidden = preset.ffn_hidden;
  config.dropout = 0.0;
  config.validate();

  GradCheckOptions options;
  if (fault == GradFault::kFfnSign) {
    const std::string target = relish_names::block(0, "ffn.fc1.weight");
    options.tamper = [target](ParamStore<double>& p) {
      if (!p.contains(target)) return;
      for (std::size_t i = 0; i < p.grad(target).size(); ++i) p.grad(target)[i] *= -1.0;
    };
  }

  Rng rng(preset.seed);
  GradSuiteResult result;
  const std::size_t longest = *std::max_element(preset.lengths.begin(), preset.lengths.end());

  for (const std::size_t s : preset.lengths) {
    ParamStore<double> params = jitter(init_relish_params(config, preset.seed + s), rng);
    const Tensor2d states = gaussian(rng, s, preset.input_dim);
    Mask mask(s, 1);
    // Pad the longest case so masked rows are exercised too.
    if (s == longest && s > 3) std::fill(mask.end() - 3, mask.end(), std::uint8_t{0});
    const double target = rng.uniform(-1.0, 1.0);
    const auto build = [&](Graph<double>& g) {
      return g.huber(relish_forward(g, states, mask, config), target, config.huber_delta);
    };
    result.cases.push_back(check("relish S=" + std::to_string(s), preset.relish_tolerance, params,
                                 build, options));
  }

  const Tensor2d states = gaussian(rng, preset.lengths.back(), preset.input_dim);
  const Mask mask(states.rows(), 1);
  const Tensor2d pooled = masked_mean_pool(states, std::span(mask));
  const double target = rng.uniform(-1.0, 1.0);

  {
    ParamStore<double> params = jitter(init_linear_params(preset.input_dim, preset.seed), rng);
    const auto build = [&](Graph<double>& g) {
      return g.huber(linear_head_forward(g, g.constant(pooled)), target, 1.0);
    };
    result.cases.push_back(check("linear head", preset.head_tolerance, params, build, options));
  }
  {
    ParamStore<double> params = jitter(
        init_mlp_params({preset.input_dim, preset.mlp_hidden, 0.0}, preset.seed), rng);
    const auto build = [&](Graph<double>& g) {
      return g.huber(mlp_head_forward(g, g.constant(pooled), 0.0), target, 1.0);
    };
    result.cases.push_back(check("mlp head", preset.head_tolerance, params, build, options));
  }

  const std::vector<double> grid = make_grid(0.0, 5.0, 1.0);
  const double raft_target = rng.uniform(0.0, 5.0);
  {
    ParamStore<double> params;
    params.add("logits", gaussian(rng, 1, grid.size()));
    const auto build = [&](Graph<double>& g) {
      return raft_loss(g, g.param("logits"), grid, raft_target);
    };
    result.cases.push_back(check("raft logits", preset.raft_tolerance, params, build, options));
  }
  {
    const GridLogitModel model{preset.input_dim, grid};
    ParamStore<double> params = jitter(model.init_params(preset.seed), rng);
    const auto build = [&](Graph<double>& g) {
      return raft_loss(g, grid_logits(g, g.constant(pooled)), grid, raft_target);
    };
    result.cases.push_back(check("grid-logit model", preset.raft_tolerance, params, build,
                                 options));
  }
  return result;
}

}  // namespace relish
