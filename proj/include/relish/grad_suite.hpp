// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

// Finite-difference suite over every head on tiny double-precision configs.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "relish/gradcheck.hpp"

namespace relish {

struct GradSuitePreset {
  std::string name = "default";
  std::size_t input_dim = 32;
  std::size_t head_dim = 16;
  std::size_t heads = 4;
  std::size_t layers = 2;
  std::size_t ffn_hidden = 32;
  std::vector<std::size_t> lengths = {1, 7, 16};
  std::size_t mlp_hidden = 12;
  std::uint64_t seed = 7;
  double relish_tolerance = 1e-4;
  double head_tolerance = 1e-6;
  double raft_tolerance = 1e-6;
};

/// "default" (L=2) or "deep" (L=5). Throws ConfigError otherwise.
GradSuitePreset grad_preset(std::string_view name);

enum class GradFault { kNone, kFfnSign };
GradFault parse_grad_fault(std::string_view text);

struct GradCase {
  std::string name;
  double tolerance = 0.0;
  GradCheckReport report;
};

struct GradSuiteResult {
  std::vector<GradCase> cases;
  [[nodiscard]] bool passed() const;
};

/// RELISH at each sequence length (the longest one with trailing padding),
/// then the linear head, the MLP head, RAFT w.r.t. logits and the grid-logit model.
GradSuiteResult run_grad_suite(const GradSuitePreset& preset, GradFault fault = GradFault::kNone);

}  // namespace relish
