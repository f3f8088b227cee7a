// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file latent_diffusion.hpp
 * @brief Forward noising chain over latents z_1..z_T, its closed-form
 * marginal, the noise predictor, and the reverse (ancestral) chain.
 *
 * Every stochastic operation takes its standard-normal draws as an argument.
 * The forward operations are templates so the same code runs on plain
 * matrices and on tape variables during training.
 */

#pragma once

#include "molddpm/autodiff.hpp"
#include "molddpm/error.hpp"
#include "molddpm/random.hpp"
#include "molddpm/schedule.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace molddpm {

using Eigen::MatrixXd;

/// z_t = sqrt(1 - beta_t) z_{t-1} + sqrt(beta_t) noise, for 2 <= t <= T.
template <class T>
T forward_step(const T& z_prev, int t, const NoiseSchedule& schedule, const MatrixXd& noise) {
  if (t < 2 || t > schedule.steps()) {
    throw Error(ErrorCode::StepOutOfRange, "forward_step needs 2 <= t <= T, got " + std::to_string(t));
  }
  const double beta = schedule.beta(t);
  const MatrixXd scaled_noise = std::sqrt(beta) * noise;
  return std::sqrt(1.0 - beta) * z_prev + scaled_noise;
}

/// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) noise, for 1 <= t <= T.
template <class T>
T marginal_sample(const T& z0, int t, const NoiseSchedule& schedule, const MatrixXd& noise) {
  const double ab = schedule.alpha_bar(t);
  const MatrixXd scaled_noise = std::sqrt(1.0 - ab) * noise;
  return std::sqrt(ab) * z0 + scaled_noise;
}

struct DenoiserConfig {
  int hidden = 64;
  void validate() const;
};

/// Two-hidden-layer MLP with an additive linear skip from the input:
///   eps_hat = W_out h2 + b_out + W_skip z_t,
/// where the step enters through a learned projection of sinusoidal
/// features of t / T added to the first hidden layer.
struct DenoiserParams {
  DenoiserConfig config;
  int latent_dim = 0;
  int steps = 0;
  ad::ParameterSet params;

  static DenoiserParams init(const DenoiserConfig& config, int latent_dim, int steps, Rng& rng);
};

/// 1 x width sinusoidal features of the normalised step t / T.
MatrixXd time_features(int t, int steps, int width);

ad::Var predict_noise(ad::Tape& tape, const ad::Var& z_t, int t, const DenoiserParams& denoiser);
MatrixXd predict_noise(const MatrixXd& z_t, int t, const DenoiserParams& denoiser);

/// u = (z_t - beta_t / sqrt(1 - alpha_bar_t) eps_hat) / sqrt(alpha_t), for an
/// arbitrary noise prediction. Throws DegenerateSchedule when
/// 1 - alpha_bar_t is not positive.
MatrixXd reverse_mean_from_noise(const MatrixXd& z_t, int t, const NoiseSchedule& schedule,
                                 const MatrixXd& eps_hat);
MatrixXd reverse_mean(const MatrixXd& z_t, int t, const NoiseSchedule& schedule,
                      const DenoiserParams& denoiser);

/// z_{t-1} = u + sqrt(beta_t) noise for t >= 2; at t = 1 only the mean is
/// returned and `noise` is ignored.
MatrixXd reverse_step(const MatrixXd& z_t, int t, const NoiseSchedule& schedule,
                      const DenoiserParams& denoiser, const MatrixXd& noise);

/// Runs reverse steps t = T..2 from the given z_T with explicit per-step
/// draws (`noises[t - 2]` is used at step t). Returns z_1.
MatrixXd ancestral_sample(const NoiseSchedule& schedule, const DenoiserParams& denoiser,
                          const MatrixXd& z_T, const std::vector<MatrixXd>& noises);

/// Draws z_T ~ N(0, I) and the per-step noise from `rng`.
MatrixXd ancestral_sample(const NoiseSchedule& schedule, const DenoiserParams& denoiser,
                          int batch, Rng& rng);

}  // namespace molddpm
