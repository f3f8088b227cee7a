// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file diagnostics.hpp
 * @brief Numerical self-checks: closed forms against brute force, Monte
 * Carlo, exhaustive enumeration and finite differences.
 *
 * Each check returns the measured error and the tolerance it was held to.
 * For Monte-Carlo checks the measured value is the worst relative deviation
 * over coordinates.
 */

#pragma once

#include "molddpm/model.hpp"
#include "molddpm/random.hpp"
#include "molddpm/schedule.hpp"

#include <string>
#include <vector>

namespace molddpm {

struct RunConfig;

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Max relative error of every alpha_bar table against a long-double
/// left fold of (1 - beta_s).
CheckResult check_schedule_products(const std::vector<NoiseSchedule>& schedules,
                                    double tolerance = 1e-12);

/// Iterating the noiseless chain z_t = sqrt(1 - beta_t) z_{t-1} from
/// z1 = sqrt(1 - beta_1) z0 must land on sqrt(abar_t) z0 for every t.
CheckResult check_chain_zero_noise(const NoiseSchedule& schedule, int latent_dim, Rng& rng,
                                   double tolerance = 1e-10);

/// Per-coordinate variance of the stochastic chain at step t vs 1 - abar_t.
CheckResult check_chain_variance(const NoiseSchedule& schedule, int t, int latent_dim,
                                 int samples, Rng& rng, double tolerance = 0.02);

/// With eps_hat = 0 the reverse mean is z_t / sqrt(alpha_t) at every t.
CheckResult check_reverse_zero_noise(const NoiseSchedule& schedule, int latent_dim, Rng& rng,
                                     double tolerance = 1e-12);

/// Per-coordinate variance of reverse_step around its mean vs beta_t.
CheckResult check_reverse_variance(const NoiseSchedule& schedule, const DenoiserParams& denoiser,
                                   int t, int samples, Rng& rng, double tolerance = 0.02);

/// Closed-form prior KL vs a density-ratio Monte-Carlo estimate for `points`
/// random z0 with entries in [-3, 3].
CheckResult check_prior_kl(const NoiseSchedule& schedule, int points, int latent_dim,
                           int samples, Rng& rng, double tolerance = 0.01);

/// Sums exp(log-likelihood) over every graph with max_nodes = 2, K = 2, L = 2
/// for `draws` random decoders, through both likelihood implementations.
CheckResult check_likelihood_normalization(int draws, Rng& rng, double tolerance = 1e-10);

struct GradientCheck {
  double encoder = 0.0;
  double decoder = 0.0;
  double denoiser = 0.0;
  double worst() const;
};

/// Analytic gradient of -elbo against central differences, per parameter
/// group: |g_a - g_n| / max(|g_a|, |g_n|) over all scalars of the group.
GradientCheck gradient_check(const ModelParams& model, const NoiseSchedule& schedule,
                             const std::vector<std::string>& smiles, Rng& rng,
                             double step = 1e-5);

/// d = 4, T = 3, one two-atom molecule, small transformer widths.
CheckResult check_gradients(Rng& rng, double tolerance = 1e-4);

struct CheckOptions {
  /// Test hook: perturbs one alpha_bar entry so the schedule check fails.
  bool corrupt_alpha_bar = false;
};

/// The full suite for `config`'s schedule and latent width.
std::vector<CheckResult> run_checks(const RunConfig& config, const CheckOptions& options = {});

/// CSV `check,measured,tolerance,status`.
std::string format_checks(const std::vector<CheckResult>& results);

}  // namespace molddpm
