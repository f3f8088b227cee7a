// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/diagnostics.hpp"
#include "molddpm/encoder.hpp"
#include "molddpm/error.hpp"
#include "molddpm/schedule.hpp"
#include "molddpm/smiles.hpp"

#include <gtest/gtest.h>

namespace molddpm {
namespace {

EncoderConfig small_config() {
  EncoderConfig c;
  c.latent_dim = 6;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_model = 8;
  c.d_ff = 16;
  return c;
}

EncoderParams small_encoder(int max_nodes = 8) {
  Rng rng = make_rng(5);
  return EncoderParams::init(small_config(), 16, 5, max_nodes, rng);
}

TEST(Encoder, OutputShape) {
  const std::vector<MolecularGraph> graphs{parse_smiles("CCO"), parse_smiles("c1ccccc1")};
  const Eigen::MatrixXd z0 = encode(to_batch(graphs, 8, 16, 5), small_encoder());
  EXPECT_EQ(z0.rows(), 2);
  EXPECT_EQ(z0.cols(), 6);
  EXPECT_TRUE(z0.allFinite());
}

TEST(Encoder, BatchCompanionsDoNotMatter) {
  const EncoderParams enc = small_encoder();
  const MolecularGraph g = parse_smiles("CC(=O)O");
  const Eigen::MatrixXd alone = encode(to_batch(std::span(&g, 1), 8, 16, 5), enc);
  const std::vector<MolecularGraph> graphs{parse_smiles("c1ccccc1"), g};
  const Eigen::MatrixXd together = encode(to_batch(graphs, 8, 16, 5), enc);
  EXPECT_EQ(alone.row(0), together.row(1));
}

TEST(Encoder, PaddingIsIgnored) {
  const EncoderParams enc = small_encoder(8);
  const MolecularGraph g = parse_smiles("CCN");
  const Eigen::MatrixXd z_small = encode(to_batch(std::span(&g, 1), 4, 16, 5), enc);
  const Eigen::MatrixXd z_large = encode(to_batch(std::span(&g, 1), 8, 16, 5), enc);
  EXPECT_EQ(z_small, z_large);
}

TEST(Encoder, BondsChangeTheLatent) {
  // The bond bias table starts at zero, so give it values first.
  EncoderParams enc = small_encoder();
  Rng rng = make_rng(6);
  auto& bias = enc.params.at("edge_bias").value;
  bias = standard_normal(bias.rows(), bias.cols(), rng);
  const std::vector<MolecularGraph> graphs{parse_smiles("CCC"), parse_smiles("C=CC"),
                                           parse_smiles("C1CC1")};
  const Eigen::MatrixXd z0 = encode(to_batch(graphs, 8, 16, 5), enc);
  EXPECT_GT((z0.row(0) - z0.row(1)).norm(), 1e-6);
  EXPECT_GT((z0.row(0) - z0.row(2)).norm(), 1e-6);
}

TEST(Encoder, DeterministicWithoutDropout) {
  const EncoderParams enc = small_encoder();
  const MolecularGraph g = parse_smiles("OCCN");
  const GraphBatch batch = to_batch(std::span(&g, 1), 8, 16, 5);
  EXPECT_EQ(encode(batch, enc), encode(batch, enc));
}

TEST(Encoder, RejectsMismatchedLayout) {
  const EncoderParams enc = small_encoder(4);
  const MolecularGraph g = parse_smiles("CC");
  EXPECT_THROW(encode(to_batch(std::span(&g, 1), 8, 16, 5), enc), Error);
  EXPECT_THROW(encode(to_batch(std::span(&g, 1), 4, 12, 5), enc), Error);
}

TEST(Encoder, ConfigValidation) {
  EncoderConfig c = small_config();
  c.n_heads = 3;
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_NO_THROW(small_config().validate());
}

TEST(Encoder, FirstLatentReparameterisation) {
  const NoiseSchedule s({0.19, 0.2});
  Eigen::MatrixXd z0(1, 2), noise(1, 2);
  z0 << 1.0, -2.0;
  noise << 0.5, 1.0;
  const Eigen::MatrixXd z1 = sample_z1(z0, s, noise);
  EXPECT_NEAR(z1(0, 0), 0.9 * 1.0 + std::sqrt(0.19) * 0.5, 1e-15);
  EXPECT_NEAR(z1(0, 1), 0.9 * -2.0 + std::sqrt(0.19) * 1.0, 1e-15);
}

TEST(Encoder, GradientsMatchFiniteDifferences) {
  Rng rng = make_rng(17);
  EXPECT_TRUE(check_gradients(rng).passed);
}

}  // namespace
}  // namespace molddpm
