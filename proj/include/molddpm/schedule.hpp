// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

namespace molddpm {

/// Variance schedule beta_1..beta_T with alpha_t = 1 - beta_t and
/// alpha_bar_t = prod_{s <= t} alpha_s, all precomputed. Steps are 1-based
/// in the accessors.
class NoiseSchedule {
 public:
  /// Throws InvalidRange unless T >= 1 and every beta lies in (0, 1).
  explicit NoiseSchedule(std::vector<double> betas);

  /// Builds a schedule from caller-supplied tables without recomputing or
  /// validating them. Only diagnostics use this, to inject corrupted tables.
  static NoiseSchedule from_tables_unchecked(std::vector<double> betas,
                                             std::vector<double> alphas,
                                             std::vector<double> alpha_bars);

  int steps() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const { return betas_.at(index(t)); }
  double alpha(int t) const { return alphas_.at(index(t)); }
  double alpha_bar(int t) const { return alpha_bars_.at(index(t)); }

  const std::vector<double>& betas() const { return betas_; }
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& alpha_bars() const { return alpha_bars_; }

 private:
  NoiseSchedule() = default;
  std::size_t index(int t) const;

  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
};

/// beta_t = beta_start + (t - 1) (beta_end - beta_start) / (T - 1), endpoints
/// inclusive; beta_1 = beta_start when T = 1.
NoiseSchedule linear_schedule(int steps, double beta_start, double beta_end);

/// alpha_bar_T: the signal coefficient left at the end of the forward chain.
double prior_convergence_gap(const NoiseSchedule& schedule);

}  // namespace molddpm
