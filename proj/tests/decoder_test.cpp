// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/decoder.hpp"
#include "molddpm/diagnostics.hpp"
#include "molddpm/error.hpp"
#include "molddpm/smiles.hpp"

#include <gtest/gtest.h>

namespace molddpm {
namespace {

DecoderParams small_decoder(int max_nodes = 6) {
  DecoderConfig c;
  c.n_layers = 1;
  c.n_heads = 2;
  c.d_model = 8;
  c.d_ff = 16;
  Rng rng = make_rng(8);
  return DecoderParams::init(c, 4, 16, 5, max_nodes, rng);
}

TEST(Decoder, LikelihoodSumsToOneOverAllGraphs) {
  Rng rng = make_rng(9);
  const CheckResult r = check_likelihood_normalization(20, rng);
  EXPECT_TRUE(r.passed) << r.measured;
}

TEST(Decoder, LogitShapes) {
  const DecoderParams dec = small_decoder();
  Rng rng = make_rng(10);
  const GraphLogits logits = decode_logits(standard_normal(2, 4, rng), dec);
  ASSERT_EQ(logits.node.size(), 2u);
  EXPECT_EQ(logits.node[0].rows(), 6);
  EXPECT_EQ(logits.node[0].cols(), 16);
  EXPECT_EQ(logits.edge[0].rows(), max_edges(6));
  EXPECT_EQ(logits.edge[0].cols(), 5);
}

TEST(Decoder, TapeAndMatrixPathsAgree) {
  const DecoderParams dec = small_decoder();
  Rng rng = make_rng(11);
  const Eigen::MatrixXd z1 = standard_normal(1, 4, rng);
  const MolecularGraph g = parse_smiles("CC=O");
  const GraphBatch batch = to_batch(std::span(&g, 1), 6, 16, 5);
  const int counts[] = {3};
  const double matrix = log_likelihood(decode_logits(z1, dec, counts), batch)[0];
  ad::Tape tape;
  const double taped = log_likelihood(decode_graph(tape, tape.constant(z1), 3, dec), batch, 0).scalar();
  EXPECT_NEAR(matrix, taped, 1e-12);
  EXPECT_LT(matrix, 0.0);
}

TEST(Decoder, GreedyDecodeRespectsMask) {
  const DecoderParams dec = small_decoder();
  Rng rng = make_rng(12);
  const Eigen::MatrixXd z1 = standard_normal(1, 4, rng);
  const MolecularGraph g = greedy_decode(z1, dec, {true, true, true, true, false, false});
  EXPECT_EQ(g.num_nodes(), 4);
  EXPECT_NO_THROW(g.validate(16, 5));
  EXPECT_THROW(greedy_decode(z1, dec, {true, false, true, false, false, false}), Error);
  EXPECT_THROW(greedy_decode(z1, dec, {true, true}), Error);
}

TEST(Decoder, RejectsNodeCountMismatch) {
  const DecoderParams dec = small_decoder();
  const MolecularGraph g = parse_smiles("CCO");
  const GraphBatch batch = to_batch(std::span(&g, 1), 6, 16, 5);
  ad::Tape tape;
  const DecodedGraph decoded = decode_graph(tape, tape.constant(Eigen::MatrixXd::Zero(1, 4)), 2, dec);
  EXPECT_THROW(log_likelihood(decoded, batch, 0), Error);
  EXPECT_THROW(decode_graph(tape, tape.constant(Eigen::MatrixXd::Zero(1, 4)), 7, dec), Error);
}

}  // namespace
}  // namespace molddpm
