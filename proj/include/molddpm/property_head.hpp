// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file property_head.hpp
 * @brief MLP regressor on z1 and the joint generative + regression
 * fine-tuning loss.
 *
 *   loss = -elbo + lambda * mean((head(z1) - y)^2)
 *
 * The z1 sample that feeds the decoder also feeds the head. Evaluation uses
 * the noiseless z1 = sqrt(1 - beta_1) z0 and never touches an rng.
 */

#pragma once

#include "molddpm/autodiff.hpp"
#include "molddpm/encoder.hpp"
#include "molddpm/model.hpp"
#include "molddpm/objective.hpp"

#include <span>
#include <string_view>

namespace molddpm {

struct HeadConfig {
  int hidden = 64;
  void validate() const;
};

/// Parameters w1 (d x h), b1, w2 (h x 1), b2.
struct HeadParams {
  HeadConfig config;
  int latent_dim = 0;
  ad::ParameterSet params;

  static HeadParams init(const HeadConfig& config, int latent_dim, Rng& rng);
};

/// B x 1 predictions, gelu(z1 w1 + b1) w2 + b2.
ad::Var predict(ad::Tape& tape, const ad::Var& z1, const HeadParams& head);
Eigen::VectorXd predict(const Eigen::MatrixXd& z1, const HeadParams& head);

/// Parameter groups updated during fine-tuning. The head always trains.
enum class Unfreeze { All, Encoder, Head };
std::string_view to_string(Unfreeze u);
Unfreeze parse_unfreeze(std::string_view text);

struct FinetuneConfig {
  double lambda = 1.0;
  Unfreeze unfreeze = Unfreeze::All;
  AdamConfig adam;
  int batch_size = 16;
  int steps = 2000;
  double grad_clip = 5.0;

  void validate() const;
};

struct FinetuneComponents {
  ElboBreakdown elbo;
  double mse = 0.0;
  double loss = 0.0;
};

struct FinetuneTerms {
  ElboTerms elbo;
  ad::Var mse;
  ad::Var loss;
  FinetuneComponents values() const;
};

FinetuneTerms build_finetune_loss(ad::Tape& tape, const GraphBatch& batch,
                                  std::span<const double> targets, const ModelParams& model,
                                  const HeadParams& head, const NoiseSchedule& schedule,
                                  double lambda, const ElboDraws& draws,
                                  Rng* dropout_rng = nullptr);

FinetuneComponents finetune_loss(const GraphBatch& batch, std::span<const double> targets,
                                 const ModelParams& model, const HeadParams& head,
                                 const NoiseSchedule& schedule, double lambda,
                                 const ElboDraws& draws);

struct FinetuneReport {
  FinetuneComponents components;  // before the update
  double grad_norm = 0.0;
};

/// One descent step on the joint loss over the groups selected by
/// config.unfreeze. Throws NonFiniteGradient without touching parameters.
FinetuneReport finetune_step(const GraphBatch& batch, std::span<const double> targets,
                             ModelParams& model, HeadParams& head, const NoiseSchedule& schedule,
                             const FinetuneConfig& config, Rng& rng, Adam& optimizer);

/// Supervised-only step for an encoder with no generative pretraining:
/// loss = mean((head(sqrt(1 - beta_1) z0) - y)^2), encoder and head updated.
FinetuneReport supervised_step(const GraphBatch& batch, std::span<const double> targets,
                               EncoderParams& encoder, HeadParams& head,
                               const NoiseSchedule& schedule, const FinetuneConfig& config,
                               Rng& rng, Adam& optimizer);

/// Noiseless z1 for every graph of the batch.
Eigen::MatrixXd deterministic_z1(const GraphBatch& batch, const EncoderParams& encoder,
                                 const NoiseSchedule& schedule);

/// Mean squared error on a split. Throws EmptySplit for an empty batch.
double evaluate_mse(const GraphBatch& batch, std::span<const double> targets,
                    const EncoderParams& encoder, const HeadParams& head,
                    const NoiseSchedule& schedule);

}  // namespace molddpm
