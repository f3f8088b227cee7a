// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/latent_diffusion.hpp"

#include "molddpm/layers.hpp"

namespace molddpm {

void DenoiserConfig::validate() const {
  if (hidden < 2 || hidden % 2 != 0) {
    throw Error(ErrorCode::InvalidConfig, "denoiser hidden width must be even and >= 2");
  }
}

DenoiserParams DenoiserParams::init(const DenoiserConfig& config, int latent_dim, int steps,
                                    Rng& rng) {
  config.validate();
  DenoiserParams p;
  p.config = config;
  p.latent_dim = latent_dim;
  p.steps = steps;
  nn::add_linear(p.params, "in", latent_dim, config.hidden, rng);
  p.params.add("time", nn::init_weight(config.hidden, config.hidden, rng));
  nn::add_linear(p.params, "hidden", config.hidden, config.hidden, rng);
  nn::add_linear(p.params, "out", config.hidden, latent_dim, rng);
  p.params.add("skip", ad::Matrix::Identity(latent_dim, latent_dim));
  return p;
}

MatrixXd time_features(int t, int steps, int width) {
  const double position = 1000.0 * static_cast<double>(t) / static_cast<double>(steps);
  const int half = width / 2;
  MatrixXd features(1, width);
  for (int i = 0; i < half; ++i) {
    const double freq = std::pow(10000.0, -static_cast<double>(i) / half);
    features(0, i) = std::sin(position * freq);
    features(0, half + i) = std::cos(position * freq);
  }
  return features;
}

ad::Var predict_noise(ad::Tape& tape, const ad::Var& z_t, int t, const DenoiserParams& denoiser) {
  if (t < 1 || t > denoiser.steps) {
    throw Error(ErrorCode::StepOutOfRange, "denoiser step " + std::to_string(t));
  }
  const auto& params = denoiser.params;
  const ad::Var time = ad::matmul(
      tape.constant(time_features(t, denoiser.steps, denoiser.config.hidden).replicate(z_t.rows(), 1)),
      tape.parameter(params.at("time")));
  ad::Var h = ad::gelu(nn::linear(tape, params, "in", z_t) + time);
  h = ad::gelu(nn::linear(tape, params, "hidden", h));
  ad::Var eps = nn::linear(tape, params, "out", h) +
                ad::matmul(z_t, tape.parameter(params.at("skip")));
  if (!eps.value().allFinite()) {
    throw Error(ErrorCode::NonFiniteActivation, "denoiser produced a non-finite output");
  }
  return eps;
}

MatrixXd predict_noise(const MatrixXd& z_t, int t, const DenoiserParams& denoiser) {
  ad::Tape tape;
  return predict_noise(tape, tape.constant(z_t), t, denoiser).value();
}

MatrixXd reverse_mean_from_noise(const MatrixXd& z_t, int t, const NoiseSchedule& schedule,
                                 const MatrixXd& eps_hat) {
  const double one_minus_ab = 1.0 - schedule.alpha_bar(t);
  if (!(one_minus_ab > 0.0)) {
    throw Error(ErrorCode::DegenerateSchedule, "1 - alpha_bar_t underflows at t = " + std::to_string(t));
  }
  const double coeff = schedule.beta(t) / std::sqrt(one_minus_ab);
  return (z_t - coeff * eps_hat) / std::sqrt(schedule.alpha(t));
}

MatrixXd reverse_mean(const MatrixXd& z_t, int t, const NoiseSchedule& schedule,
                      const DenoiserParams& denoiser) {
  return reverse_mean_from_noise(z_t, t, schedule, predict_noise(z_t, t, denoiser));
}

MatrixXd reverse_step(const MatrixXd& z_t, int t, const NoiseSchedule& schedule,
                      const DenoiserParams& denoiser, const MatrixXd& noise) {
  MatrixXd mean = reverse_mean(z_t, t, schedule, denoiser);
  if (t == 1) return mean;
  return mean + std::sqrt(schedule.beta(t)) * noise;
}

MatrixXd ancestral_sample(const NoiseSchedule& schedule, const DenoiserParams& denoiser,
                          const MatrixXd& z_T, const std::vector<MatrixXd>& noises) {
  const int steps = schedule.steps();
  if (static_cast<int>(noises.size()) != std::max(0, steps - 1)) {
    throw Error(ErrorCode::ShapeMismatch, "ancestral_sample needs T - 1 noise draws");
  }
  MatrixXd z = z_T;
  for (int t = steps; t >= 2; --t) {
    z = reverse_step(z, t, schedule, denoiser, noises[static_cast<std::size_t>(t - 2)]);
  }
  return z;
}

MatrixXd ancestral_sample(const NoiseSchedule& schedule, const DenoiserParams& denoiser,
                          int batch, Rng& rng) {
  MatrixXd z_T = standard_normal(batch, denoiser.latent_dim, rng);
  std::vector<MatrixXd> noises(static_cast<std::size_t>(std::max(0, schedule.steps() - 1)));
  for (int t = schedule.steps(); t >= 2; --t) {
    noises[static_cast<std::size_t>(t - 2)] = standard_normal(batch, denoiser.latent_dim, rng);
  }
  return ancestral_sample(schedule, denoiser, z_T, noises);
}

}  // namespace molddpm
