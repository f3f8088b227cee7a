// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file encoder.hpp
 * @brief Graph transformer f: graph -> z0 and the reparameterised first
 * latent z1 = sqrt(1 - beta_1) z0 + sqrt(beta_1) noise.
 *
 * Node tokens are category embeddings plus learned positional embeddings.
 * Bond categories enter every layer as an additive attention bias per head.
 * Only the unmasked nodes of a graph take part, so padding never changes the
 * result. The final states are mean-pooled and projected to the latent width.
 */

#pragma once

#include "molddpm/autodiff.hpp"
#include "molddpm/layers.hpp"
#include "molddpm/molgraph.hpp"
#include "molddpm/random.hpp"
#include "molddpm/schedule.hpp"

#include <cmath>

namespace molddpm {

struct EncoderConfig {
  int latent_dim = 16;
  int n_layers = 2;
  int n_heads = 4;
  int d_model = 64;
  int d_ff = 128;
  double dropout = 0.0;

  nn::TransformerDims dims() const { return {d_model, n_heads, d_ff}; }
  void validate() const;
};

struct EncoderParams {
  EncoderConfig config;
  int num_atom_types = 0;
  int num_bond_types = 0;
  int max_nodes = 0;
  ad::ParameterSet params;

  static EncoderParams init(const EncoderConfig& config, int num_atom_types,
                            int num_bond_types, int max_nodes, Rng& rng);
};

/// z0 of graph `b` as a 1 x latent_dim row on `tape`.
ad::Var encode_graph(ad::Tape& tape, const GraphBatch& batch, std::size_t b,
                     const EncoderParams& encoder, const nn::Dropout& drop = {});

/// B x latent_dim matrix of z0 rows. Deterministic; dropout is never applied.
Eigen::MatrixXd encode(const GraphBatch& batch, const EncoderParams& encoder);

/// Works on plain matrices and on tape variables.
template <class T>
T sample_z1(const T& z0, const NoiseSchedule& schedule, const Eigen::MatrixXd& noise) {
  const double beta = schedule.beta(1);
  const Eigen::MatrixXd scaled_noise = std::sqrt(beta) * noise;
  return std::sqrt(1.0 - beta) * z0 + scaled_noise;
}

}  // namespace molddpm
