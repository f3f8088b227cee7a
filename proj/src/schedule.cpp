// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/schedule.hpp"

#include "molddpm/error.hpp"

#include <string>

namespace molddpm {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw Error(ErrorCode::InvalidRange, "schedule needs T >= 1");
  alphas_.reserve(betas_.size());
  alpha_bars_.reserve(betas_.size());
  double running = 1.0;
  for (double b : betas_) {
    if (!(b > 0.0 && b < 1.0)) {
      throw Error(ErrorCode::InvalidRange, "beta " + std::to_string(b) + " outside (0, 1)");
    }
    alphas_.push_back(1.0 - b);
    running *= 1.0 - b;
    alpha_bars_.push_back(running);
  }
}

NoiseSchedule NoiseSchedule::from_tables_unchecked(std::vector<double> betas,
                                                   std::vector<double> alphas,
                                                   std::vector<double> alpha_bars) {
  NoiseSchedule s;
  s.betas_ = std::move(betas);
  s.alphas_ = std::move(alphas);
  s.alpha_bars_ = std::move(alpha_bars);
  return s;
}

std::size_t NoiseSchedule::index(int t) const {
  if (t < 1 || t > steps()) {
    throw Error(ErrorCode::StepOutOfRange,
                "step " + std::to_string(t) + " outside [1, " + std::to_string(steps()) + "]");
  }
  return static_cast<std::size_t>(t - 1);
}

NoiseSchedule linear_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1 || !(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw Error(ErrorCode::InvalidRange, "need T >= 1 and 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int t = 1; t <= steps; ++t) {
    betas[static_cast<std::size_t>(t - 1)] =
        steps == 1 ? beta_start
                   : beta_start + (t - 1) * (beta_end - beta_start) / (steps - 1);
  }
  return NoiseSchedule(std::move(betas));
}

double prior_convergence_gap(const NoiseSchedule& schedule) {
  return schedule.alpha_bar(schedule.steps());
}

}  // namespace molddpm
