// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/property_head.hpp"

#include "molddpm/error.hpp"
#include "molddpm/layers.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace molddpm {

void HeadConfig::validate() const {
  if (hidden < 1) throw Error(ErrorCode::InvalidConfig, "head hidden width must be >= 1");
}

HeadParams HeadParams::init(const HeadConfig& config, int latent_dim, Rng& rng) {
  config.validate();
  HeadParams h;
  h.config = config;
  h.latent_dim = latent_dim;
  h.params.add("w1", nn::init_weight(latent_dim, config.hidden, rng));
  h.params.add("b1", ad::Matrix::Zero(1, config.hidden));
  h.params.add("w2", nn::init_weight(config.hidden, 1, rng));
  h.params.add("b2", ad::Matrix::Zero(1, 1));
  return h;
}

ad::Var predict(ad::Tape& tape, const ad::Var& z1, const HeadParams& head) {
  const auto& p = head.params;
  if (z1.cols() != head.latent_dim) {
    throw Error(ErrorCode::ShapeMismatch, "head input width does not match the latent width");
  }
  ad::Var h = ad::gelu(
      ad::add_row(ad::matmul(z1, tape.parameter(p.at("w1"))), tape.parameter(p.at("b1"))));
  ad::Var y = ad::add_row(ad::matmul(h, tape.parameter(p.at("w2"))), tape.parameter(p.at("b2")));
  if (!y.value().allFinite()) {
    throw Error(ErrorCode::NonFiniteActivation, "property head produced a non-finite output");
  }
  return y;
}

Eigen::VectorXd predict(const Eigen::MatrixXd& z1, const HeadParams& head) {
  ad::Tape tape;
  return predict(tape, tape.constant(z1), head).value().col(0);
}

std::string_view to_string(Unfreeze u) {
  switch (u) {
    case Unfreeze::All: return "all";
    case Unfreeze::Encoder: return "encoder";
    case Unfreeze::Head: return "head";
  }
  return "all";
}

Unfreeze parse_unfreeze(std::string_view text) {
  if (text == "all") return Unfreeze::All;
  if (text == "encoder") return Unfreeze::Encoder;
  if (text == "head") return Unfreeze::Head;
  throw Error(ErrorCode::InvalidConfig,
              "unfreeze must be one of all, encoder, head; got '" + std::string(text) + "'");
}

void FinetuneConfig::validate() const {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidConfig, "finetune lambda must be >= 0");
  if (!(adam.learning_rate >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "learning rate must be non-negative");
  }
  if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch size must be >= 1");
  if (steps < 0) throw Error(ErrorCode::InvalidConfig, "step count must be >= 0");
  if (!(grad_clip > 0.0)) throw Error(ErrorCode::InvalidConfig, "gradient clip must be > 0");
}

namespace {

void check_targets(const GraphBatch& batch, std::span<const double> targets) {
  if (targets.size() != batch.size()) {
    throw Error(ErrorCode::ShapeMismatch, "one target per graph is required");
  }
  for (double y : targets) {
    if (!std::isfinite(y)) throw Error(ErrorCode::InvalidRange, "targets must be finite");
  }
}

ad::Var mse_of(const ad::Var& predictions, std::span<const double> targets) {
  Eigen::MatrixXd y(static_cast<Eigen::Index>(targets.size()), 1);
  for (std::size_t i = 0; i < targets.size(); ++i) y(static_cast<Eigen::Index>(i), 0) = targets[i];
  return ad::scale(ad::squared_norm(predictions - y), 1.0 / static_cast<double>(targets.size()));
}

template <class Build>
FinetuneReport descend(Build&& build, std::span<ad::ParameterSet* const> sets, double grad_clip,
                       Adam& optimizer) {
  ad::Tape tape;
  auto [components, loss] = build(tape);
  const ad::Gradients grads = tape.backward(loss);
  FinetuneReport report;
  report.components = components;
  report.grad_norm = global_grad_norm(sets, grads);
  if (!std::isfinite(report.grad_norm)) {
    throw Error(ErrorCode::NonFiniteGradient,
                "fine-tune gradient norm is not finite (loss " +
                    std::to_string(components.loss) + ", mse " + std::to_string(components.mse) +
                    ")");
  }
  optimizer.step(sets, grads, clip_scale(report.grad_norm, grad_clip));
  return report;
}

}  // namespace

FinetuneComponents FinetuneTerms::values() const {
  FinetuneComponents c;
  c.elbo = elbo.values();
  c.mse = mse.scalar();
  c.loss = loss.scalar();
  return c;
}

FinetuneTerms build_finetune_loss(ad::Tape& tape, const GraphBatch& batch,
                                  std::span<const double> targets, const ModelParams& model,
                                  const HeadParams& head, const NoiseSchedule& schedule,
                                  double lambda, const ElboDraws& draws, Rng* dropout_rng) {
  check_targets(batch, targets);
  FinetuneTerms terms;
  terms.elbo = build_elbo(tape, batch, model, schedule, draws, dropout_rng);
  terms.mse = mse_of(predict(tape, ad::concat_rows(terms.elbo.z1), head), targets);
  const ad::Var pretrain = terms.elbo.loss(LossWeights{});
  // lambda = 0 must reproduce the pretraining loss exactly.
  terms.loss = lambda == 0.0 ? pretrain : pretrain + ad::scale(terms.mse, lambda);
  return terms;
}

FinetuneComponents finetune_loss(const GraphBatch& batch, std::span<const double> targets,
                                 const ModelParams& model, const HeadParams& head,
                                 const NoiseSchedule& schedule, double lambda,
                                 const ElboDraws& draws) {
  ad::Tape tape;
  return build_finetune_loss(tape, batch, targets, model, head, schedule, lambda, draws).values();
}

FinetuneReport finetune_step(const GraphBatch& batch, std::span<const double> targets,
                             ModelParams& model, HeadParams& head, const NoiseSchedule& schedule,
                             const FinetuneConfig& config, Rng& rng, Adam& optimizer) {
  config.validate();
  const ElboDraws draws = draw_elbo_noise(batch.size(), model.latent_dim(), schedule.steps(), rng);
  std::vector<ad::ParameterSet*> sets{&head.params};
  if (config.unfreeze != Unfreeze::Head) sets.push_back(&model.encoder.params);
  if (config.unfreeze == Unfreeze::All) {
    sets.push_back(&model.decoder.params);
    sets.push_back(&model.denoiser.params);
  }
  return descend(
      [&](ad::Tape& tape) {
        FinetuneTerms t = build_finetune_loss(tape, batch, targets, model, head, schedule,
                                              config.lambda, draws, &rng);
        return std::pair{t.values(), t.loss};
      },
      sets, config.grad_clip, optimizer);
}

FinetuneReport supervised_step(const GraphBatch& batch, std::span<const double> targets,
                               EncoderParams& encoder, HeadParams& head,
                               const NoiseSchedule& schedule, const FinetuneConfig& config,
                               Rng& rng, Adam& optimizer) {
  config.validate();
  check_targets(batch, targets);
  const double shrink = std::sqrt(1.0 - schedule.beta(1));
  const nn::Dropout drop{encoder.config.dropout, &rng};
  ad::ParameterSet* sets[] = {&encoder.params, &head.params};
  return descend(
      [&](ad::Tape& tape) {
        std::vector<ad::Var> z1;
        for (std::size_t b = 0; b < batch.size(); ++b) {
          z1.push_back(ad::scale(encode_graph(tape, batch, b, encoder, drop), shrink));
        }
        ad::Var mse = mse_of(predict(tape, ad::concat_rows(z1), head), targets);
        FinetuneComponents c;
        c.mse = mse.scalar();
        c.loss = c.mse;
        return std::pair{c, mse};
      },
      sets, config.grad_clip, optimizer);
}

Eigen::MatrixXd deterministic_z1(const GraphBatch& batch, const EncoderParams& encoder,
                                 const NoiseSchedule& schedule) {
  return std::sqrt(1.0 - schedule.beta(1)) * encode(batch, encoder);
}

double evaluate_mse(const GraphBatch& batch, std::span<const double> targets,
                    const EncoderParams& encoder, const HeadParams& head,
                    const NoiseSchedule& schedule) {
  if (batch.size() == 0) throw Error(ErrorCode::EmptySplit, "cannot evaluate an empty split");
  check_targets(batch, targets);
  const Eigen::VectorXd pred = predict(deterministic_z1(batch, encoder, schedule), head);
  const Eigen::Map<const Eigen::VectorXd> y(targets.data(), static_cast<Eigen::Index>(targets.size()));
  return (pred - y).squaredNorm() / static_cast<double>(targets.size());
}

}  // namespace molddpm
