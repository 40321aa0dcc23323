// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace relish {

/// Broad failure class. The CLI maps each category onto a stable exit code.
enum class ErrorCategory {
  config = 2,
  data = 3,
  numeric = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  [[nodiscard]] ErrorCategory category() const noexcept { return category_; }
  [[nodiscard]] int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

#define RELISH_DEFINE_ERROR(Name, Category)                                 \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(Category, what) {}       \
  }

// Shape/dimension mismatches between tensors, configs and checkpoints.
RELISH_DEFINE_ERROR(ShapeError, ErrorCategory::data);
// Softmax or pooling over a support with no unmasked entry.
RELISH_DEFINE_ERROR(EmptySupportError, ErrorCategory::numeric);
// Argument outside its valid range (schedule step, gold range, ...).
RELISH_DEFINE_ERROR(RangeError, ErrorCategory::numeric);
// Forward value that is NaN or infinite where a finite one is required.
RELISH_DEFINE_ERROR(EvaluationError, ErrorCategory::numeric);
// Tape misuse: foreign or unrecorded node handles.
RELISH_DEFINE_ERROR(InternalError, ErrorCategory::numeric);
// Constant series fed to a correlation.
RELISH_DEFINE_ERROR(DegenerateVarianceError, ErrorCategory::numeric);
// Ragged (dataset, backbone) coverage across seeds.
RELISH_DEFINE_ERROR(CoverageError, ErrorCategory::numeric);
// Non-finite loss during optimization.
RELISH_DEFINE_ERROR(TrainingError, ErrorCategory::numeric);
// No admissible hidden size when matching parameter budgets.
RELISH_DEFINE_ERROR(MatchingError, ErrorCategory::numeric);
// Numeric string that does not parse.
RELISH_DEFINE_ERROR(ParseError, ErrorCategory::data);
// Every sample failed to parse.
RELISH_DEFINE_ERROR(EmptySampleError, ErrorCategory::data);
// Empty target list and similar dataset-level problems.
RELISH_DEFINE_ERROR(DataError, ErrorCategory::data);
// Malformed binary container (HSF or checkpoint).
RELISH_DEFINE_ERROR(FormatError, ErrorCategory::data);
// Malformed manifest, duplicate ids, dangling paths.
RELISH_DEFINE_ERROR(ManifestError, ErrorCategory::data);
// Filesystem failures.
RELISH_DEFINE_ERROR(IoError, ErrorCategory::data);
// Invalid run configuration (unknown keys, out-of-range hyperparameters).
RELISH_DEFINE_ERROR(ConfigError, ErrorCategory::config);

#undef RELISH_DEFINE_ERROR

}  // namespace relish
