// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file objective.hpp
 * @brief Three-term evidence lower bound and the gradient step that
 * maximises it.
 *
 *   elbo = E[log p(G | z1)] - KL(q(z_T | G) || N(0, I)) - E_t ||eps - eps_hat(z_t, t)||^2
 *
 * Each term is a single-sample estimate per graph (one z1 draw, one step t,
 * one eps) averaged over the batch. The KL uses the closed-form marginal
 * q(z_T | G) = N(sqrt(abar_T) z0, (1 - abar_T) I).
 */

#pragma once

#include "molddpm/autodiff.hpp"
#include "molddpm/model.hpp"
#include "molddpm/molgraph.hpp"
#include "molddpm/random.hpp"
#include "molddpm/schedule.hpp"

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace molddpm {

struct ElboBreakdown {
  double recon = 0.0;
  double prior_kl = 0.0;
  double denoise = 0.0;
  double elbo = 0.0;
};

struct LossWeights {
  double recon = 1.0;
  double prior_kl = 1.0;
  double denoise = 1.0;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  AdamConfig adam;
  int batch_size = 16;
  int steps = 5000;
  std::uint64_t seed = 0;
  double grad_clip = 5.0;
  LossWeights weights;

  void validate() const;
};

/// Noise consumed by one graph's ELBO estimate.
struct GraphDraws {
  Eigen::MatrixXd z1_noise;  // 1 x d
  int t = 1;
  Eigen::MatrixXd eps;  // 1 x d
};
using ElboDraws = std::vector<GraphDraws>;

ElboDraws draw_elbo_noise(std::size_t batch, int latent_dim, int steps, Rng& rng);

/// Per-row KL(N(sqrt(abar_T) z0, (1 - abar_T) I) || N(0, I)).
Eigen::VectorXd prior_kl_closed_form(const Eigen::MatrixXd& z0, const NoiseSchedule& schedule);
ad::Var prior_kl(const ad::Var& z0, const NoiseSchedule& schedule);

/// Batch mean of ||noise_b - eps_hat(marginal_sample(z0_b, t_b, noise_b), t_b)||^2.
double denoise_term(const Eigen::MatrixXd& z0, const NoiseSchedule& schedule,
                    const DenoiserParams& denoiser, std::span<const int> t_draws,
                    const Eigen::MatrixXd& noise_draws);

/// Tape view of the three batch-mean terms.
struct ElboTerms {
  ad::Var recon;
  ad::Var prior_kl;
  ad::Var denoise;
  std::vector<ad::Var> z0;
  std::vector<ad::Var> z1;

  ElboBreakdown values() const;
  /// -(w_r recon - w_k prior_kl - w_d denoise).
  ad::Var loss(const LossWeights& weights) const;
};

ElboTerms build_elbo(ad::Tape& tape, const GraphBatch& batch, const ModelParams& model,
                     const NoiseSchedule& schedule, const ElboDraws& draws,
                     Rng* dropout_rng = nullptr);

ElboBreakdown elbo(const GraphBatch& batch, const ModelParams& model,
                   const NoiseSchedule& schedule, const ElboDraws& draws);
ElboBreakdown elbo(const GraphBatch& batch, const ModelParams& model,
                   const NoiseSchedule& schedule, Rng& rng);

/// Adaptive moment estimation without weight decay. Moment buffers are keyed
/// by parameter address.
class Adam {
 public:
  explicit Adam(AdamConfig config) : config_(config) {}

  /// Applies one update to every parameter of `sets`; missing gradients count
  /// as zero. Gradients are multiplied by `grad_scale` first.
  void step(std::span<ad::ParameterSet* const> sets, const ad::Gradients& grads,
            double grad_scale = 1.0);
  long steps_taken() const { return t_; }

 private:
  struct Moments {
    Eigen::MatrixXd m;
    Eigen::MatrixXd v;
  };
  AdamConfig config_;
  long t_ = 0;
  std::unordered_map<const ad::Parameter*, Moments> moments_;
};

/// Euclidean norm of all gradients belonging to `sets`.
double global_grad_norm(std::span<ad::ParameterSet* const> sets, const ad::Gradients& grads);

/// Scale factor that brings `norm` down to `clip`; 1 when already below.
double clip_scale(double norm, double clip);

struct StepReport {
  ElboBreakdown breakdown;  // before the update
  double grad_norm = 0.0;   // before clipping
};

/// One descent step on -elbo. Throws NonFiniteGradient when a gradient is
/// not finite; parameters are untouched in that case.
StepReport train_step(const GraphBatch& batch, ModelParams& model, const NoiseSchedule& schedule,
                      const TrainConfig& config, Rng& rng, Adam& optimizer);

}  // namespace molddpm
