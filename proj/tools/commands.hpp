// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace relish::cli {

/// Parses `args` (without the program name) and runs one subcommand.
/// Returns the process exit code: 0 ok, 2 config, 3 data, 4 numeric/training.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace relish::cli
