// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/molgraph.hpp"

#include "molddpm/error.hpp"

#include <algorithm>
#include <string>

namespace molddpm {

MolecularGraph::MolecularGraph(std::vector<int> node_types)
    : node_types_(std::move(node_types)),
      bonds_(node_types_.size() * node_types_.size(), 0) {}

int MolecularGraph::bond(int i, int j) const {
  const int n = num_nodes();
  if (i < 0 || j < 0 || i >= n || j >= n) {
    throw Error(ErrorCode::InvalidGraph, "bond index out of range");
  }
  return bonds_[static_cast<std::size_t>(i * n + j)];
}

void MolecularGraph::set_bond(int i, int j, int category) {
  const int n = num_nodes();
  if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
    throw Error(ErrorCode::InvalidGraph, "invalid bond endpoints");
  }
  if (category < 0 || category > 255) {
    throw Error(ErrorCode::InvalidGraph, "bond category out of range");
  }
  bonds_[static_cast<std::size_t>(i * n + j)] = static_cast<std::uint8_t>(category);
  bonds_[static_cast<std::size_t>(j * n + i)] = static_cast<std::uint8_t>(category);
}

int MolecularGraph::add_node(int type) {
  const std::size_t n = node_types_.size();
  std::vector<std::uint8_t> grown((n + 1) * (n + 1), 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(bonds_.begin() + static_cast<std::ptrdiff_t>(i * n), n,
                grown.begin() + static_cast<std::ptrdiff_t>(i * (n + 1)));
  }
  bonds_ = std::move(grown);
  node_types_.push_back(type);
  return static_cast<int>(n);
}

int MolecularGraph::bond_count() const {
  const int n = num_nodes();
  int count = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) count += bond(i, j) != 0;
  }
  return count;
}

void MolecularGraph::validate(int num_atom_types, int num_bond_types) const {
  const int n = num_nodes();
  if (n == 0) throw Error(ErrorCode::InvalidGraph, "graph has no nodes");
  for (int t : node_types_) {
    if (t < 0 || t >= num_atom_types) {
      throw Error(ErrorCode::InvalidGraph,
                  "node category " + std::to_string(t) + " out of range");
    }
  }
  for (int i = 0; i < n; ++i) {
    if (bond(i, i) != 0) throw Error(ErrorCode::InvalidGraph, "nonzero diagonal");
    for (int j = i + 1; j < n; ++j) {
      if (bond(i, j) != bond(j, i)) {
        throw Error(ErrorCode::InvalidGraph, "bond matrix not symmetric");
      }
      if (bond(i, j) >= num_bond_types) {
        throw Error(ErrorCode::InvalidGraph, "bond category out of range");
      }
    }
  }
}

MolecularGraph MolecularGraph::permuted(std::span<const int> order) const {
  const int n = num_nodes();
  if (static_cast<int>(order.size()) != n) {
    throw Error(ErrorCode::InvalidGraph, "permutation size mismatch");
  }
  std::vector<int> types(order.size());
  for (int k = 0; k < n; ++k) types[static_cast<std::size_t>(k)] = node_type(order[static_cast<std::size_t>(k)]);
  MolecularGraph out(std::move(types));
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const int c = bond(order[static_cast<std::size_t>(a)], order[static_cast<std::size_t>(b)]);
      if (c != 0) out.set_bond(a, b, c);
    }
  }
  return out;
}

Eigen::MatrixXi MolecularGraph::bond_grid() const {
  const int n = num_nodes();
  Eigen::MatrixXi grid(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) grid(i, j) = bond(i, j);
  }
  return grid;
}

int edge_slot(int i, int j, int max_nodes) {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= max_nodes || i == j) {
    throw Error(ErrorCode::ShapeMismatch, "edge slot out of range");
  }
  return i * max_nodes - i * (i + 1) / 2 + (j - i - 1);
}

std::pair<int, int> edge_pair(int slot, int max_nodes) {
  if (slot < 0 || slot >= max_edges(max_nodes)) {
    throw Error(ErrorCode::ShapeMismatch, "edge slot out of range");
  }
  int i = 0;
  int row_len = max_nodes - 1;
  while (slot >= row_len) {
    slot -= row_len;
    ++i;
    --row_len;
  }
  return {i, i + 1 + slot};
}

int GraphBatch::num_nodes(std::size_t b) const {
  return static_cast<int>(std::count(node_mask[b].begin(), node_mask[b].end(), true));
}

std::vector<int> GraphBatch::node_labels(std::size_t b) const {
  const int n = num_nodes(b);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Eigen::Index k = 0;
    node_onehot[b].row(i).maxCoeff(&k);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(k);
  }
  return labels;
}

std::vector<int> GraphBatch::edge_labels(std::size_t b) const {
  const int n = num_nodes(b);
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Eigen::Index k = 0;
      edge_onehot[b].row(edge_slot(i, j, max_nodes)).maxCoeff(&k);
      labels.push_back(static_cast<int>(k));
    }
  }
  return labels;
}

MolecularGraph GraphBatch::graph(std::size_t b) const {
  return from_categorical(argmax_rows(node_onehot[b]), argmax_rows(edge_onehot[b]),
                          node_mask[b], max_nodes);
}

GraphBatch to_batch(std::span<const MolecularGraph> graphs, int max_nodes,
                    int num_atom_types, int num_bond_types) {
  if (max_nodes < 1) throw Error(ErrorCode::InvalidConfig, "max_nodes must be >= 1");
  GraphBatch batch;
  batch.max_nodes = max_nodes;
  batch.num_atom_types = num_atom_types;
  batch.num_bond_types = num_bond_types;
  const int e_max = max_edges(max_nodes);
  for (const MolecularGraph& g : graphs) {
    g.validate(num_atom_types, num_bond_types);
    const int n = g.num_nodes();
    if (n > max_nodes) {
      throw Error(ErrorCode::GraphTooLarge, std::to_string(n) + " nodes exceed max_nodes " +
                                                std::to_string(max_nodes));
    }
    Eigen::MatrixXd nodes = Eigen::MatrixXd::Zero(max_nodes, num_atom_types);
    Eigen::MatrixXd edges = Eigen::MatrixXd::Zero(e_max, num_bond_types);
    std::vector<bool> node_mask(static_cast<std::size_t>(max_nodes), false);
    std::vector<bool> edge_mask(static_cast<std::size_t>(e_max), false);
    for (int i = 0; i < n; ++i) {
      nodes(i, g.node_type(i)) = 1.0;
      node_mask[static_cast<std::size_t>(i)] = true;
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const int slot = edge_slot(i, j, max_nodes);
        edges(slot, g.bond(i, j)) = 1.0;
        edge_mask[static_cast<std::size_t>(slot)] = true;
      }
    }
    batch.node_onehot.push_back(std::move(nodes));
    batch.edge_onehot.push_back(std::move(edges));
    batch.node_mask.push_back(std::move(node_mask));
    batch.edge_mask.push_back(std::move(edge_mask));
  }
  return batch;
}

MolecularGraph from_categorical(std::span<const int> node_argmax,
                                std::span<const int> edge_argmax,
                                const std::vector<bool>& node_mask,
                                int max_nodes) {
  if (static_cast<int>(node_argmax.size()) != max_nodes ||
      static_cast<int>(node_mask.size()) != max_nodes ||
      static_cast<int>(edge_argmax.size()) != max_edges(max_nodes)) {
    throw Error(ErrorCode::ShapeMismatch, "from_categorical: size mismatch");
  }
  std::vector<int> index(static_cast<std::size_t>(max_nodes), -1);
  std::vector<int> types;
  for (int i = 0; i < max_nodes; ++i) {
    if (!node_mask[static_cast<std::size_t>(i)]) continue;
    index[static_cast<std::size_t>(i)] = static_cast<int>(types.size());
    types.push_back(node_argmax[static_cast<std::size_t>(i)]);
  }
  MolecularGraph g(std::move(types));
  for (int slot = 0; slot < max_edges(max_nodes); ++slot) {
    const auto [i, j] = edge_pair(slot, max_nodes);
    const int a = index[static_cast<std::size_t>(i)];
    const int b = index[static_cast<std::size_t>(j)];
    const int c = edge_argmax[static_cast<std::size_t>(slot)];
    if (a >= 0 && b >= 0 && c != 0) g.set_bond(a, b, c);
  }
  return g;
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()), 0);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index k = 1; k < logits.cols(); ++k) {
      if (logits(i, k) > logits(i, best)) best = static_cast<int>(k);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

ReconstructionAccuracy reconstruction_accuracy(const GraphLogits& predicted,
                                               const GraphBatch& truth) {
  if (predicted.node.size() != truth.size() || predicted.edge.size() != truth.size()) {
    throw Error(ErrorCode::ShapeMismatch, "batch size mismatch");
  }
  long node_hits = 0, node_total = 0, edge_hits = 0, edge_total = 0;
  for (std::size_t b = 0; b < truth.size(); ++b) {
    if (predicted.node[b].rows() != truth.node_onehot[b].rows() ||
        predicted.node[b].cols() != truth.node_onehot[b].cols() ||
        predicted.edge[b].rows() != truth.edge_onehot[b].rows() ||
        predicted.edge[b].cols() != truth.edge_onehot[b].cols()) {
      throw Error(ErrorCode::ShapeMismatch, "logit shape mismatch");
    }
    const auto node_pred = argmax_rows(predicted.node[b]);
    const auto node_true = argmax_rows(truth.node_onehot[b]);
    for (std::size_t i = 0; i < node_pred.size(); ++i) {
      if (!truth.node_mask[b][i]) continue;
      ++node_total;
      node_hits += node_pred[i] == node_true[i];
    }
    const auto edge_pred = argmax_rows(predicted.edge[b]);
    const auto edge_true = argmax_rows(truth.edge_onehot[b]);
    for (std::size_t s = 0; s < edge_pred.size(); ++s) {
      if (!truth.edge_mask[b][s]) continue;
      ++edge_total;
      edge_hits += edge_pred[s] == edge_true[s];
    }
  }
  ReconstructionAccuracy acc;
  if (node_total > 0) acc.node = static_cast<double>(node_hits) / static_cast<double>(node_total);
  if (edge_total > 0) acc.edge = static_cast<double>(edge_hits) / static_cast<double>(edge_total);
  return acc;
}

}  // namespace molddpm
