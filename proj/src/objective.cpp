// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/objective.hpp"

#include "molddpm/error.hpp"

#include <cmath>
#include <random>
#include <string>

namespace molddpm {

void TrainConfig::validate() const {
  if (!(adam.learning_rate >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "learning rate must be non-negative");
  }
  if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch size must be >= 1");
  if (steps < 0) throw Error(ErrorCode::InvalidConfig, "step count must be >= 0");
  if (!(grad_clip > 0.0)) throw Error(ErrorCode::InvalidConfig, "gradient clip must be > 0");
}

ElboDraws draw_elbo_noise(std::size_t batch, int latent_dim, int steps, Rng& rng) {
  std::uniform_int_distribution<int> step(1, steps);
  ElboDraws draws(batch);
  for (auto& d : draws) {
    d.z1_noise = standard_normal(1, latent_dim, rng);
    d.t = step(rng);
    d.eps = standard_normal(1, latent_dim, rng);
  }
  return draws;
}

namespace {

double terminal_alpha_bar(const NoiseSchedule& schedule) {
  const double ab = schedule.alpha_bar(schedule.steps());
  if (!(1.0 - ab > 0.0)) {
    throw Error(ErrorCode::DegenerateSchedule, "alpha_bar_T is 1; the prior KL is undefined");
  }
  return ab;
}

ad::Var mean_of(const std::vector<ad::Var>& terms) {
  ad::Var total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = total + terms[i];
  return ad::scale(total, 1.0 / static_cast<double>(terms.size()));
}

}  // namespace

Eigen::VectorXd prior_kl_closed_form(const Eigen::MatrixXd& z0, const NoiseSchedule& schedule) {
  const double ab = terminal_alpha_bar(schedule);
  const double per_dim = -ab - std::log1p(-ab);
  return 0.5 * (ab * z0.rowwise().squaredNorm().array() +
                per_dim * static_cast<double>(z0.cols()))
                   .matrix();
}

ad::Var prior_kl(const ad::Var& z0, const NoiseSchedule& schedule) {
  const double ab = terminal_alpha_bar(schedule);
  const double per_dim = -ab - std::log1p(-ab);
  Eigen::MatrixXd offset(1, 1);
  offset(0, 0) = 0.5 * per_dim * static_cast<double>(z0.cols());
  return ad::scale(ad::squared_norm(z0), 0.5 * ab) + offset;
}

double denoise_term(const Eigen::MatrixXd& z0, const NoiseSchedule& schedule,
                    const DenoiserParams& denoiser, std::span<const int> t_draws,
                    const Eigen::MatrixXd& noise_draws) {
  if (static_cast<Eigen::Index>(t_draws.size()) != z0.rows() || noise_draws.rows() != z0.rows() ||
      noise_draws.cols() != z0.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "denoise_term: one step and one noise row per latent");
  }
  if (z0.rows() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index b = 0; b < z0.rows(); ++b) {
    const int t = t_draws[static_cast<std::size_t>(b)];
    const Eigen::MatrixXd noise = noise_draws.row(b);
    const Eigen::MatrixXd z_t = marginal_sample<Eigen::MatrixXd>(z0.row(b), t, schedule, noise);
    total += (noise - predict_noise(z_t, t, denoiser)).squaredNorm();
  }
  return total / static_cast<double>(z0.rows());
}

ElboBreakdown ElboTerms::values() const {
  ElboBreakdown out;
  out.recon = recon.scalar();
  out.prior_kl = prior_kl.scalar();
  out.denoise = denoise.scalar();
  out.elbo = out.recon - out.prior_kl - out.denoise;
  return out;
}

ad::Var ElboTerms::loss(const LossWeights& weights) const {
  return ad::scale(prior_kl, weights.prior_kl) + ad::scale(denoise, weights.denoise) -
         ad::scale(recon, weights.recon);
}

ElboTerms build_elbo(ad::Tape& tape, const GraphBatch& batch, const ModelParams& model,
                     const NoiseSchedule& schedule, const ElboDraws& draws, Rng* dropout_rng) {
  if (batch.size() == 0) throw Error(ErrorCode::ShapeMismatch, "empty batch");
  if (draws.size() != batch.size()) {
    throw Error(ErrorCode::ShapeMismatch, "one set of draws per graph");
  }
  const nn::Dropout encoder_drop{model.encoder.config.dropout, dropout_rng};
  const nn::Dropout decoder_drop{model.decoder.config.dropout, dropout_rng};
  ElboTerms terms;
  std::vector<ad::Var> recon, kl, denoise;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const GraphDraws& d = draws[b];
    ad::Var z0 = encode_graph(tape, batch, b, model.encoder, encoder_drop);
    ad::Var z1 = sample_z1(z0, schedule, d.z1_noise);
    DecodedGraph decoded = decode_graph(tape, z1, batch.num_nodes(b), model.decoder, decoder_drop);
    recon.push_back(log_likelihood(decoded, batch, b));
    kl.push_back(prior_kl(z0, schedule));
    ad::Var z_t = marginal_sample(z0, d.t, schedule, d.eps);
    ad::Var eps_hat = predict_noise(tape, z_t, d.t, model.denoiser);
    denoise.push_back(ad::squared_norm(eps_hat - d.eps));
    terms.z0.push_back(z0);
    terms.z1.push_back(z1);
  }
  terms.recon = mean_of(recon);
  terms.prior_kl = mean_of(kl);
  terms.denoise = mean_of(denoise);
  return terms;
}

ElboBreakdown elbo(const GraphBatch& batch, const ModelParams& model,
                   const NoiseSchedule& schedule, const ElboDraws& draws) {
  ad::Tape tape;
  return build_elbo(tape, batch, model, schedule, draws).values();
}

ElboBreakdown elbo(const GraphBatch& batch, const ModelParams& model,
                   const NoiseSchedule& schedule, Rng& rng) {
  return elbo(batch, model, schedule,
              draw_elbo_noise(batch.size(), model.latent_dim(), schedule.steps(), rng));
}

// ---------------------------------------------------------------------------
// Optimisation

void Adam::step(std::span<ad::ParameterSet* const> sets, const ad::Gradients& grads,
                double grad_scale) {
  ++t_;
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (ad::ParameterSet* set : sets) {
    for (auto& [name, p] : *set) {
      auto [it, inserted] = moments_.try_emplace(&p);
      Moments& mom = it->second;
      if (inserted) {
        mom.m = Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols());
        mom.v = Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols());
      }
      auto g_it = grads.find(&p);
      if (g_it != grads.end()) {
        const Eigen::MatrixXd g = grad_scale * g_it->second;
        mom.m = config_.beta1 * mom.m + (1.0 - config_.beta1) * g;
        mom.v = config_.beta2 * mom.v + (1.0 - config_.beta2) * g.cwiseProduct(g);
      } else {
        mom.m *= config_.beta1;
        mom.v *= config_.beta2;
      }
      p.value.array() -= config_.learning_rate * (mom.m.array() / bias1) /
                         ((mom.v.array() / bias2).sqrt() + config_.epsilon);
    }
  }
}

double global_grad_norm(std::span<ad::ParameterSet* const> sets, const ad::Gradients& grads) {
  double sq = 0.0;
  for (ad::ParameterSet* set : sets) {
    for (const auto& [name, p] : *set) {
      auto it = grads.find(&p);
      if (it != grads.end()) sq += it->second.squaredNorm();
    }
  }
  return std::sqrt(sq);
}

double clip_scale(double norm, double clip) { return norm > clip ? clip / norm : 1.0; }

StepReport train_step(const GraphBatch& batch, ModelParams& model, const NoiseSchedule& schedule,
                      const TrainConfig& config, Rng& rng, Adam& optimizer) {
  config.validate();
  const ElboDraws draws = draw_elbo_noise(batch.size(), model.latent_dim(), schedule.steps(), rng);
  ad::Tape tape;
  ElboTerms terms = build_elbo(tape, batch, model, schedule, draws, &rng);
  const ad::Gradients grads = tape.backward(terms.loss(config.weights));

  ad::ParameterSet* sets[] = {&model.encoder.params, &model.decoder.params, &model.denoiser.params};
  StepReport report;
  report.breakdown = terms.values();
  report.grad_norm = global_grad_norm(sets, grads);
  if (!std::isfinite(report.grad_norm)) {
    throw Error(ErrorCode::NonFiniteGradient,
                "gradient norm is not finite (recon " + std::to_string(report.breakdown.recon) +
                    ", prior_kl " + std::to_string(report.breakdown.prior_kl) + ", denoise " +
                    std::to_string(report.breakdown.denoise) + ")");
  }
  optimizer.step(sets, grads, clip_scale(report.grad_norm, config.grad_clip));
  return report;
}

}  // namespace molddpm
