// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "relish/optim.hpp"

#include <cmath>

#include "relish/error.hpp"

namespace relish {

template <typename T>
void AdamW<T>::step(ParamStore<T>& params, double lr) {
  if (!(lr >= 0.0)) throw RangeError("adamw: learning rate must be non-negative");
  ++t_;
  const double bias1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  const T b1 = static_cast<T>(options_.beta1);
  const T b2 = static_cast<T>(options_.beta2);
  const T decay = static_cast<T>(1.0 - lr * options_.weight_decay);
  const T step_size = static_cast<T>(lr / bias1);
  const T root_bias2 = static_cast<T>(std::sqrt(bias2));
  const T eps = static_cast<T>(options_.eps);

  for (auto& [name, entry] : params.entries()) {
    auto it = moments_.find(name);
    if (it == moments_.end()) {
      it = moments_
               .emplace(name, Moments{Tensor2<T>(entry.value.rows(), entry.value.cols()),
                                      Tensor2<T>(entry.value.rows(), entry.value.cols())})
               .first;
    }
    Tensor2<T>& m = it->second.m;
    Tensor2<T>& v = it->second.v;
    Tensor2<T>& p = entry.value;
    const Tensor2<T>& g = entry.grad;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (options_.weight_decay != 0.0) p[i] *= decay;
      m[i] = b1 * m[i] + (T{1} - b1) * g[i];
      v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
      const T denom = std::sqrt(v[i]) / root_bias2 + eps;
      p[i] -= step_size * m[i] / denom;
    }
  }
}

template class AdamW<float>;
template class AdamW<double>;

LinearWarmupSchedule::LinearWarmupSchedule(double base_lr, std::size_t total_steps,
                                           double warmup_ratio)
    : base_lr_(base_lr), total_steps_(total_steps) {
  if (total_steps == 0) throw RangeError("schedule: total_steps must be positive");
  if (!(warmup_ratio >= 0.0 && warmup_ratio <= 1.0)) {
    throw RangeError("schedule: warmup ratio must lie in [0, 1]");
  }
  // Rounded before ceil so that 0.1·100 counts as exactly 10 steps.
  const double raw = std::round(warmup_ratio * static_cast<double>(total_steps) * 1e9) / 1e9;
  warmup_steps_ = static_cast<std::size_t>(std::ceil(raw));
  if (warmup_steps_ == 0) warmup_steps_ = 1;
  if (warmup_steps_ > total_steps_) warmup_steps_ = total_steps_;
}

double LinearWarmupSchedule::lr_at(std::size_t step) const {
  if (step < 1 || step > total_steps_) {
    throw RangeError("schedule: step " + std::to_string(step) + " outside [1, " +
                     std::to_string(total_steps_) + "]");
  }
  if (step <= warmup_steps_) {
    return base_lr_ * static_cast<double>(step) / static_cast<double>(warmup_steps_);
  }
  return base_lr_ * static_cast<double>(total_steps_ - step) /
         static_cast<double>(total_steps_ - warmup_steps_);
}

}  // namespace relish
