// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/decoder.hpp"

#include "molddpm/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace molddpm {

void DecoderConfig::validate() const {
  if (n_layers < 0 || n_heads < 1 || d_model < 1 || d_ff < 1) {
    throw Error(ErrorCode::InvalidConfig, "decoder sizes must be positive");
  }
  if (d_model % n_heads != 0) {
    throw Error(ErrorCode::InvalidConfig, "decoder d_model must be divisible by n_heads");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw Error(ErrorCode::InvalidConfig, "decoder dropout must lie in [0, 1)");
  }
}

DecoderParams DecoderParams::init(const DecoderConfig& config, int latent_dim,
                                  int num_atom_types, int num_bond_types, int max_nodes,
                                  Rng& rng) {
  config.validate();
  DecoderParams p;
  p.config = config;
  p.latent_dim = latent_dim;
  p.num_atom_types = num_atom_types;
  p.num_bond_types = num_bond_types;
  p.max_nodes = max_nodes;
  nn::add_linear(p.params, "in", latent_dim, config.d_model, rng);
  p.params.add("pos_embed", nn::init_weight(max_nodes, config.d_model, rng));
  for (int l = 0; l < config.n_layers; ++l) {
    nn::add_transformer_layer(p.params, "layer" + std::to_string(l), config.dims(), rng);
  }
  nn::add_layer_norm(p.params, "final_norm", config.d_model);
  nn::add_linear(p.params, "node_head", config.d_model, num_atom_types, rng);
  p.params.add("edge_hidden/w", nn::init_weight(config.d_model, config.d_model, rng));
  p.params.add("edge_hidden/b", ad::Matrix::Zero(1, config.d_model));
  nn::add_linear(p.params, "edge_head", config.d_model, num_bond_types, rng);
  return p;
}

DecodedGraph decode_graph(ad::Tape& tape, const ad::Var& z1, int num_nodes,
                          const DecoderParams& decoder, const nn::Dropout& drop) {
  if (num_nodes < 1 || num_nodes > decoder.max_nodes) {
    throw Error(ErrorCode::GraphTooLarge, "decoder node count " + std::to_string(num_nodes) +
                                              " outside [1, " + std::to_string(decoder.max_nodes) + "]");
  }
  if (z1.rows() != 1 || z1.cols() != decoder.latent_dim) {
    throw Error(ErrorCode::ShapeMismatch, "decode_graph expects a 1 x latent_dim row");
  }
  const auto& params = decoder.params;
  ad::Var x = ad::repeat_rows(nn::linear(tape, params, "in", z1), num_nodes) +
              ad::slice_rows(tape.parameter(params.at("pos_embed")), 0, num_nodes);
  for (int l = 0; l < decoder.config.n_layers; ++l) {
    x = nn::transformer_layer(tape, params, "layer" + std::to_string(l), x, decoder.config.dims(),
                              {}, drop);
  }
  x = nn::layer_norm(tape, params, "final_norm", x);

  DecodedGraph out;
  out.num_nodes = num_nodes;
  out.node_logits = nn::linear(tape, params, "node_head", x);

  std::vector<int> first, second;
  for (int i = 0; i < num_nodes; ++i) {
    for (int j = i + 1; j < num_nodes; ++j) {
      first.push_back(i);
      second.push_back(j);
    }
  }
  // W (h_i + h_j) = W h_i + W h_j, so project once per node and sum per pair.
  const ad::Var projected = ad::matmul(x, tape.parameter(params.at("edge_hidden/w")));
  ad::Var pair = ad::add_row(ad::gather_rows(projected, first) + ad::gather_rows(projected, second),
                             tape.parameter(params.at("edge_hidden/b")));
  out.edge_logits = nn::linear(tape, params, "edge_head", ad::gelu(pair));

  if (!out.node_logits.value().allFinite() || !out.edge_logits.value().allFinite()) {
    throw Error(ErrorCode::NonFiniteActivation, "decoder produced non-finite logits");
  }
  return out;
}

GraphLogits decode_logits(const Eigen::MatrixXd& z1, const DecoderParams& decoder,
                          std::span<const int> num_nodes) {
  if (static_cast<Eigen::Index>(num_nodes.size()) != z1.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "one node count per latent row");
  }
  const int v_max = decoder.max_nodes;
  GraphLogits logits;
  for (Eigen::Index b = 0; b < z1.rows(); ++b) {
    ad::Tape tape;
    const int n = num_nodes[static_cast<std::size_t>(b)];
    DecodedGraph d = decode_graph(tape, tape.constant(z1.row(b)), n, decoder);
    Eigen::MatrixXd node = Eigen::MatrixXd::Zero(v_max, decoder.num_atom_types);
    Eigen::MatrixXd edge = Eigen::MatrixXd::Zero(max_edges(v_max), decoder.num_bond_types);
    node.topRows(n) = d.node_logits.value();
    Eigen::Index row = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j, ++row) {
        edge.row(edge_slot(i, j, v_max)) = d.edge_logits.value().row(row);
      }
    }
    logits.node.push_back(std::move(node));
    logits.edge.push_back(std::move(edge));
  }
  return logits;
}

GraphLogits decode_logits(const Eigen::MatrixXd& z1, const DecoderParams& decoder) {
  std::vector<int> counts(static_cast<std::size_t>(z1.rows()), decoder.max_nodes);
  return decode_logits(z1, decoder, counts);
}

ad::Var log_likelihood(const DecodedGraph& decoded, const GraphBatch& truth, std::size_t b) {
  if (truth.num_nodes(b) != decoded.num_nodes) {
    throw Error(ErrorCode::ShapeMismatch, "decoded node count differs from the target graph");
  }
  const ad::Var nodes = ad::pick_sum(ad::log_softmax_rows(decoded.node_logits), truth.node_labels(b));
  if (decoded.num_nodes < 2) return nodes;
  return nodes + ad::pick_sum(ad::log_softmax_rows(decoded.edge_logits), truth.edge_labels(b));
}

namespace {

double masked_log_prob(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& onehot,
                       const std::vector<bool>& mask) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    Eigen::Index k = 0;
    onehot.row(i).maxCoeff(&k);
    total += logits(i, k) - lse;
  }
  return total;
}

}  // namespace

std::vector<double> log_likelihood(const GraphLogits& logits, const GraphBatch& truth) {
  if (logits.node.size() != truth.size() || logits.edge.size() != truth.size()) {
    throw Error(ErrorCode::ShapeMismatch, "batch size mismatch");
  }
  std::vector<double> out(truth.size());
  for (std::size_t b = 0; b < truth.size(); ++b) {
    if (logits.node[b].rows() != truth.node_onehot[b].rows() ||
        logits.node[b].cols() != truth.node_onehot[b].cols() ||
        logits.edge[b].rows() != truth.edge_onehot[b].rows() ||
        logits.edge[b].cols() != truth.edge_onehot[b].cols()) {
      throw Error(ErrorCode::ShapeMismatch, "logit shape mismatch");
    }
    out[b] = masked_log_prob(logits.node[b], truth.node_onehot[b], truth.node_mask[b]) +
             masked_log_prob(logits.edge[b], truth.edge_onehot[b], truth.edge_mask[b]);
  }
  return out;
}

MolecularGraph greedy_decode(const Eigen::MatrixXd& z1, const DecoderParams& decoder,
                             const std::vector<bool>& node_mask) {
  if (static_cast<int>(node_mask.size()) != decoder.max_nodes) {
    throw Error(ErrorCode::ShapeMismatch, "node mask must have max_nodes entries");
  }
  const int n = static_cast<int>(std::count(node_mask.begin(), node_mask.end(), true));
  for (int i = 0; i < decoder.max_nodes; ++i) {
    if (node_mask[static_cast<std::size_t>(i)] != (i < n)) {
      throw Error(ErrorCode::ShapeMismatch, "node mask must be a prefix");
    }
  }
  const int counts[] = {n};
  GraphLogits logits = decode_logits(z1, decoder, counts);
  return from_categorical(argmax_rows(logits.node[0]), argmax_rows(logits.edge[0]), node_mask,
                          decoder.max_nodes);
}

}  // namespace molddpm
