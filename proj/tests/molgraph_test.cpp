// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/error.hpp"
#include "molddpm/molgraph.hpp"
#include "molddpm/smiles.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace molddpm {
namespace {

constexpr int K = 16, L = 5;

int atom(const char* symbol) { return *AtomAlphabet::standard().index_of(symbol); }

TEST(EdgeSlot, EnumeratesUpperTrianglePairs) {
  const int V = 5;
  int slot = 0;
  for (int i = 0; i < V; ++i) {
    for (int j = i + 1; j < V; ++j, ++slot) {
      EXPECT_EQ(edge_slot(i, j, V), slot);
      EXPECT_EQ(edge_pair(slot, V), std::make_pair(i, j));
    }
  }
  EXPECT_EQ(slot, max_edges(V));
}

TEST(ToBatch, SingleCarbonPadded) {
  const MolecularGraph g({atom("C")});
  const GraphBatch b = to_batch(std::span(&g, 1), 2, K, L);
  EXPECT_EQ(b.node_onehot[0](0, atom("C")), 1.0);
  EXPECT_EQ(b.node_onehot[0].row(0).sum(), 1.0);
  EXPECT_EQ(b.node_onehot[0].row(1).sum(), 0.0);
  EXPECT_FALSE(b.edge_mask[0][0]);
  EXPECT_EQ(b.edge_onehot[0].row(0).sum(), 0.0);
}

TEST(ToBatch, EthanolSlots) {
  const MolecularGraph g = parse_smiles("CCO");
  const GraphBatch b = to_batch(std::span(&g, 1), 3, K, L);
  EXPECT_EQ(b.node_mask[0], (std::vector<bool>{true, true, true}));
  EXPECT_EQ(b.edge_onehot[0](edge_slot(0, 1, 3), 1), 1.0);
  EXPECT_EQ(b.edge_onehot[0](edge_slot(1, 2, 3), 1), 1.0);
  EXPECT_EQ(b.edge_onehot[0](edge_slot(0, 2, 3), 0), 1.0);
}

TEST(ToBatch, MasksFollowSizes) {
  const std::vector<MolecularGraph> graphs{parse_smiles("C"), parse_smiles("CCO")};
  const GraphBatch b = to_batch(graphs, 3, K, L);
  EXPECT_EQ(b.node_mask[0], (std::vector<bool>{true, false, false}));
  EXPECT_EQ(b.node_mask[1], (std::vector<bool>{true, true, true}));
}

TEST(ToBatch, TooLarge) {
  const MolecularGraph g = parse_smiles("CCCC");
  try {
    to_batch(std::span(&g, 1), 3, K, L);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GraphTooLarge);
  }
}

TEST(ToBatch, InvariantsOverCorpus) {
  std::istringstream in(testing::slurp(testing::source_path("data/corpus100.csv")));
  std::string line;
  std::getline(in, line);
  std::vector<MolecularGraph> graphs;
  while (std::getline(in, line)) graphs.push_back(parse_smiles(line.substr(0, line.find(','))));
  const GraphBatch b = to_batch(graphs, 32, K, L);
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const int n = graphs[g].num_nodes();
    int edges = 0;
    for (int s = 0; s < max_edges(32); ++s) {
      const auto [i, j] = edge_pair(s, 32);
      EXPECT_EQ(b.edge_mask[g][static_cast<std::size_t>(s)],
                b.node_mask[g][static_cast<std::size_t>(i)] && b.node_mask[g][static_cast<std::size_t>(j)]);
      const double row = b.edge_onehot[g].row(s).sum();
      EXPECT_EQ(row, b.edge_mask[g][static_cast<std::size_t>(s)] ? 1.0 : 0.0);
      edges += b.edge_mask[g][static_cast<std::size_t>(s)];
    }
    EXPECT_EQ(edges, n * (n - 1) / 2);
    for (int i = 0; i < 32; ++i) EXPECT_EQ(b.node_onehot[g].row(i).sum(), i < n ? 1.0 : 0.0);
    // argmax of the encoding decodes back to the source graph.
    EXPECT_EQ(from_categorical(argmax_rows(b.node_onehot[g]), argmax_rows(b.edge_onehot[g]),
                               b.node_mask[g], 32),
              graphs[g]);
    EXPECT_EQ(b.graph(g), graphs[g]);
  }
}

TEST(FromCategorical, IsolatedAtom) {
  const std::vector<int> nodes{atom("C"), 0, 0};
  const std::vector<int> edges(3, 0);
  const MolecularGraph g = from_categorical(nodes, edges, {true, false, false}, 3);
  EXPECT_EQ(g, MolecularGraph({atom("C")}));
}

TEST(FromCategorical, RandomIndicesGiveSymmetricGraphs) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> node(0, K - 1), edge(0, L - 1), size(0, 8);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = size(rng);
    std::vector<int> nodes(8), edges(static_cast<std::size_t>(max_edges(8)));
    for (int& v : nodes) v = node(rng);
    for (int& v : edges) v = edge(rng);
    std::vector<bool> mask(8, false);
    for (int i = 0; i < n; ++i) mask[static_cast<std::size_t>(i)] = true;
    const MolecularGraph g = from_categorical(nodes, edges, mask, 8);
    ASSERT_EQ(g.num_nodes(), n);
    for (int i = 0; i < n; ++i) {
      EXPECT_EQ(g.bond(i, i), 0);
      for (int j = 0; j < n; ++j) EXPECT_EQ(g.bond(i, j), g.bond(j, i));
    }
  }
}

TEST(Accuracy, PerfectLogits) {
  const std::vector<MolecularGraph> graphs{parse_smiles("CCO"), parse_smiles("c1ccccc1")};
  const GraphBatch b = to_batch(graphs, 8, K, L);
  GraphLogits logits;
  for (std::size_t g = 0; g < b.size(); ++g) {
    logits.node.push_back(1e6 * b.node_onehot[g]);
    logits.edge.push_back(1e6 * b.edge_onehot[g]);
  }
  const ReconstructionAccuracy acc = reconstruction_accuracy(logits, b);
  EXPECT_EQ(acc.node, 1.0);
  EXPECT_EQ(acc.edge, 1.0);
}

TEST(Accuracy, UniformLogitsMonteCarlo) {
  // Ties resolve to category 0, so random truths should match ~1/K of the time.
  constexpr int kTypes = 4;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> type(0, kTypes - 1);
  std::vector<MolecularGraph> graphs;
  for (int g = 0; g < 1000; ++g) {
    std::vector<int> types(10);
    for (int& t : types) t = type(rng);
    graphs.emplace_back(types);
  }
  const GraphBatch b = to_batch(graphs, 10, kTypes, 2);
  GraphLogits logits;
  for (std::size_t g = 0; g < b.size(); ++g) {
    logits.node.push_back(Eigen::MatrixXd::Zero(10, kTypes));
    logits.edge.push_back(Eigen::MatrixXd::Zero(max_edges(10), 2));
  }
  EXPECT_NEAR(reconstruction_accuracy(logits, b).node, 0.25, 0.02);
}

TEST(Accuracy, EmptyDenominatorIsOne) {
  const MolecularGraph g({atom("C")});
  const GraphBatch b = to_batch(std::span(&g, 1), 2, K, L);
  GraphLogits logits{{Eigen::MatrixXd::Zero(2, K)}, {Eigen::MatrixXd::Zero(1, L)}};
  EXPECT_EQ(reconstruction_accuracy(logits, b).edge, 1.0);
}

TEST(Accuracy, ShapeMismatch) {
  const MolecularGraph g({atom("C")});
  const GraphBatch b = to_batch(std::span(&g, 1), 2, K, L);
  GraphLogits logits{{Eigen::MatrixXd::Zero(3, K)}, {Eigen::MatrixXd::Zero(1, L)}};
  EXPECT_THROW(reconstruction_accuracy(logits, b), Error);
}

TEST(Graph, ValidateAndPermute) {
  MolecularGraph g = parse_smiles("CCO");
  EXPECT_NO_THROW(g.validate(K, L));
  EXPECT_THROW(g.validate(2, L), Error);
  EXPECT_THROW(MolecularGraph().validate(K, L), Error);
  EXPECT_THROW(g.set_bond(1, 1, 1), Error);
  const std::vector<int> order{2, 0, 1};
  const MolecularGraph p = g.permuted(order);
  EXPECT_EQ(p.node_type(0), atom("O"));
  EXPECT_EQ(p.bond(0, 2), 1);
  EXPECT_EQ(p.bond(0, 1), 0);
}

}  // namespace
}  // namespace molddpm
