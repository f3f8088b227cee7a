// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file molgraph.hpp
 * @brief Categorical molecular graphs, fixed-size batch encoding, and
 * reconstruction metrics.
 *
 * Edges are dense over node pairs: every pair (i, j) with i < j < max_nodes
 * owns one slot, and category 0 means "no bond". A graph with n nodes
 * therefore always has n (n - 1) / 2 unmasked edge slots.
 */

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace molddpm {

class MolecularGraph {
 public:
  MolecularGraph() = default;
  explicit MolecularGraph(std::vector<int> node_types);

  int num_nodes() const { return static_cast<int>(node_types_.size()); }
  int node_type(int i) const { return node_types_.at(static_cast<std::size_t>(i)); }
  const std::vector<int>& node_types() const { return node_types_; }

  int bond(int i, int j) const;
  /// Sets both (i, j) and (j, i). Self bonds are rejected.
  void set_bond(int i, int j, int category);
  int add_node(int type);

  /// Number of pairs with a category other than 0.
  int bond_count() const;
  /// Throws InvalidGraph unless every index is in range, the bond matrix is
  /// symmetric with a zero diagonal, and the graph is non-empty.
  void validate(int num_atom_types, int num_bond_types) const;

  /// Node k of the result is node order[k] of this graph.
  MolecularGraph permuted(std::span<const int> order) const;

  /// n x n category grid, used as attention-bias lookup.
  Eigen::MatrixXi bond_grid() const;

  friend bool operator==(const MolecularGraph& a, const MolecularGraph& b) {
    return a.node_types_ == b.node_types_ && a.bonds_ == b.bonds_;
  }

 private:
  std::vector<int> node_types_;
  std::vector<std::uint8_t> bonds_;  // row-major n x n
};

/// Upper-triangular slot of the pair (i, j), i != j.
int edge_slot(int i, int j, int max_nodes);
std::pair<int, int> edge_pair(int slot, int max_nodes);
constexpr int max_edges(int max_nodes) { return max_nodes * (max_nodes - 1) / 2; }

/// One-hot encoding of B graphs padded to max_nodes. Rows of unmasked slots
/// hold exactly one 1; masked rows are all zero. Node masks are prefixes.
struct GraphBatch {
  int max_nodes = 0;
  int num_atom_types = 0;
  int num_bond_types = 0;
  std::vector<Eigen::MatrixXd> node_onehot;  // each max_nodes x K
  std::vector<Eigen::MatrixXd> edge_onehot;  // each max_edges x L
  std::vector<std::vector<bool>> node_mask;
  std::vector<std::vector<bool>> edge_mask;

  std::size_t size() const { return node_onehot.size(); }
  int num_nodes(std::size_t b) const;
  /// Category per unmasked node slot, in slot order.
  std::vector<int> node_labels(std::size_t b) const;
  /// Category per pair (i, j), i < j < num_nodes(b), in slot order.
  std::vector<int> edge_labels(std::size_t b) const;
  MolecularGraph graph(std::size_t b) const;
};

/// Per-graph logits with the same layout as GraphBatch.
struct GraphLogits {
  std::vector<Eigen::MatrixXd> node;  // each max_nodes x K
  std::vector<Eigen::MatrixXd> edge;  // each max_edges x L
};

GraphBatch to_batch(std::span<const MolecularGraph> graphs, int max_nodes,
                    int num_atom_types, int num_bond_types);

/// Inverse of the batch encoding: keeps unmasked nodes in order and rebuilds
/// the symmetric bond matrix from the upper-triangular slots.
MolecularGraph from_categorical(std::span<const int> node_argmax,
                                std::span<const int> edge_argmax,
                                const std::vector<bool>& node_mask,
                                int max_nodes);

/// Row-wise argmax, lowest index on ties.
std::vector<int> argmax_rows(const Eigen::MatrixXd& logits);

struct ReconstructionAccuracy {
  double node = 1.0;
  double edge = 1.0;
};

/// Fraction of unmasked positions whose argmax matches the truth. An empty
/// denominator counts as 1.0.
ReconstructionAccuracy reconstruction_accuracy(const GraphLogits& predicted,
                                               const GraphBatch& truth);

}  // namespace molddpm
