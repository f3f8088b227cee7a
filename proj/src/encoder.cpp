// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/encoder.hpp"

#include "molddpm/error.hpp"

#include <string>
#include <vector>

namespace molddpm {

void EncoderConfig::validate() const {
  if (latent_dim < 1 || n_layers < 0 || n_heads < 1 || d_model < 1 || d_ff < 1) {
    throw Error(ErrorCode::InvalidConfig, "encoder sizes must be positive");
  }
  if (d_model % n_heads != 0) {
    throw Error(ErrorCode::InvalidConfig, "encoder d_model must be divisible by n_heads");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw Error(ErrorCode::InvalidConfig, "encoder dropout must lie in [0, 1)");
  }
}

EncoderParams EncoderParams::init(const EncoderConfig& config, int num_atom_types,
                                  int num_bond_types, int max_nodes, Rng& rng) {
  config.validate();
  EncoderParams p;
  p.config = config;
  p.num_atom_types = num_atom_types;
  p.num_bond_types = num_bond_types;
  p.max_nodes = max_nodes;
  p.params.add("node_embed", nn::init_weight(num_atom_types, config.d_model, rng));
  p.params.add("pos_embed", nn::init_weight(max_nodes, config.d_model, rng));
  p.params.add("edge_bias", ad::Matrix::Zero(num_bond_types, config.n_heads));
  for (int l = 0; l < config.n_layers; ++l) {
    nn::add_transformer_layer(p.params, "layer" + std::to_string(l), config.dims(), rng);
  }
  nn::add_layer_norm(p.params, "final_norm", config.d_model);
  nn::add_linear(p.params, "out", config.d_model, config.latent_dim, rng);
  return p;
}

ad::Var encode_graph(ad::Tape& tape, const GraphBatch& batch, std::size_t b,
                     const EncoderParams& encoder, const nn::Dropout& drop) {
  const auto& params = encoder.params;
  const auto& config = encoder.config;
  const int n = batch.num_nodes(b);
  if (n < 1) throw Error(ErrorCode::ShapeMismatch, "cannot encode a graph without nodes");
  if (batch.max_nodes > encoder.max_nodes || batch.num_atom_types != encoder.num_atom_types ||
      batch.num_bond_types != encoder.num_bond_types) {
    throw Error(ErrorCode::ShapeMismatch, "batch layout does not match the encoder");
  }

  const std::vector<int> edge_labels = batch.edge_labels(b);
  Eigen::MatrixXi grid = Eigen::MatrixXi::Zero(n, n);
  std::size_t k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++k) {
      grid(i, j) = edge_labels[k];
      grid(j, i) = edge_labels[k];
    }
  }

  ad::Var x = ad::gather_rows(tape.parameter(params.at("node_embed")), batch.node_labels(b)) +
              ad::slice_rows(tape.parameter(params.at("pos_embed")), 0, n);
  const ad::Var bias_table = tape.parameter(params.at("edge_bias"));
  std::vector<ad::Var> head_bias;
  for (int h = 0; h < config.n_heads; ++h) head_bias.push_back(ad::gather_grid(bias_table, grid, h));

  for (int l = 0; l < config.n_layers; ++l) {
    x = nn::transformer_layer(tape, params, "layer" + std::to_string(l), x, config.dims(),
                              head_bias, drop);
  }
  x = nn::layer_norm(tape, params, "final_norm", x);
  ad::Var z0 = nn::linear(tape, params, "out", ad::mean_rows(x));
  if (!z0.value().allFinite()) {
    throw Error(ErrorCode::NonFiniteActivation, "encoder produced a non-finite latent");
  }
  return z0;
}

Eigen::MatrixXd encode(const GraphBatch& batch, const EncoderParams& encoder) {
  Eigen::MatrixXd z0(static_cast<Eigen::Index>(batch.size()), encoder.config.latent_dim);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    ad::Tape tape;
    z0.row(static_cast<Eigen::Index>(b)) = encode_graph(tape, batch, b, encoder).value();
  }
  return z0;
}

}  // namespace molddpm
