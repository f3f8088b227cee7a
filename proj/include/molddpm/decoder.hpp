// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file decoder.hpp
 * @brief Transformer decoder from z1 to categorical node and edge
 * distributions, and the masked log-likelihood of a graph under them.
 *
 * z1 is projected and broadcast to one query token per node slot, each with a
 * learned positional embedding. The node count is given by the caller; only
 * that many tokens attend to each other. Edge logits are read from the sum of
 * the two node states, so slot (i, j) and (j, i) coincide by construction.
 */

#pragma once

#include "molddpm/autodiff.hpp"
#include "molddpm/layers.hpp"
#include "molddpm/molgraph.hpp"
#include "molddpm/random.hpp"

#include <span>
#include <vector>

namespace molddpm {

struct DecoderConfig {
  int n_layers = 2;
  int n_heads = 4;
  int d_model = 64;
  int d_ff = 128;
  double dropout = 0.0;

  nn::TransformerDims dims() const { return {d_model, n_heads, d_ff}; }
  void validate() const;
};

struct DecoderParams {
  DecoderConfig config;
  int latent_dim = 0;
  int num_atom_types = 0;
  int num_bond_types = 0;
  int max_nodes = 0;
  ad::ParameterSet params;

  static DecoderParams init(const DecoderConfig& config, int latent_dim, int num_atom_types,
                            int num_bond_types, int max_nodes, Rng& rng);
};

/// Logits for the first `num_nodes` slots: node_logits is n x K, edge_logits
/// is n (n - 1) / 2 x L with pairs (i < j) in slot order.
struct DecodedGraph {
  ad::Var node_logits;
  ad::Var edge_logits;
  int num_nodes = 0;
};

DecodedGraph decode_graph(ad::Tape& tape, const ad::Var& z1, int num_nodes,
                          const DecoderParams& decoder, const nn::Dropout& drop = {});

/// Padded logits for each z1 row. Rows of masked slots are zero.
GraphLogits decode_logits(const Eigen::MatrixXd& z1, const DecoderParams& decoder,
                          std::span<const int> num_nodes);
/// Same with every slot active.
GraphLogits decode_logits(const Eigen::MatrixXd& z1, const DecoderParams& decoder);

/// Sum of log-probabilities of the true categories of graph `b`.
ad::Var log_likelihood(const DecodedGraph& decoded, const GraphBatch& truth, std::size_t b);

/// Per-graph masked log-likelihood from padded logits.
std::vector<double> log_likelihood(const GraphLogits& logits, const GraphBatch& truth);

/// Mode of every categorical (lowest index on ties) for a single 1 x d z1.
MolecularGraph greedy_decode(const Eigen::MatrixXd& z1, const DecoderParams& decoder,
                             const std::vector<bool>& node_mask);

}  // namespace molddpm
