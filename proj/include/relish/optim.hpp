// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

#include "relish/param_store.hpp"

namespace relish {

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Moment accumulators for AdamW with decoupled weight decay.
template <typename T>
class AdamW {
 public:
  explicit AdamW(AdamWOptions options = {}) : options_(options) {}

  /// One update at learning rate lr. Decay is applied to the parameter first
  /// (p ← p − lr·wd·p), then the bias-corrected Adam step.
  void step(ParamStore<T>& params, double lr);

  [[nodiscard]] std::uint64_t steps() const noexcept { return t_; }
  [[nodiscard]] const AdamWOptions& options() const noexcept { return options_; }
  [[nodiscard]] const Tensor2<T>& first_moment(const std::string& name) const {
    return moments_.at(name).m;
  }
  [[nodiscard]] const Tensor2<T>& second_moment(const std::string& name) const {
    return moments_.at(name).v;
  }

 private:
  struct Moments {
    Tensor2<T> m;
    Tensor2<T> v;
  };

  AdamWOptions options_;
  std::map<std::string, Moments> moments_;
  std::uint64_t t_ = 0;
};

extern template class AdamW<float>;
extern template class AdamW<double>;

/// Linear warmup to base_lr over ceil(0.1·total) steps, then linear decay to 0.
class LinearWarmupSchedule {
 public:
  LinearWarmupSchedule(double base_lr, std::size_t total_steps, double warmup_ratio = 0.1);

  /// Learning rate for a 1-based step in [1, total_steps].
  [[nodiscard]] double lr_at(std::size_t step) const;

  [[nodiscard]] double base_lr() const noexcept { return base_lr_; }
  [[nodiscard]] std::size_t total_steps() const noexcept { return total_steps_; }
  [[nodiscard]] std::size_t warmup_steps() const noexcept { return warmup_steps_; }

 private:
  double base_lr_;
  std::size_t total_steps_;
  std::size_t warmup_steps_;
};

}  // namespace relish
