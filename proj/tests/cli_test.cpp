// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>

namespace molddpm {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliRun run(const fs::path& dir, const std::string& args) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string command = "cd '" + dir.string() + "' && '" + MOLDDPM_CLI + "' " + args + " >'" +
                              out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(command.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testing::slurp(out), testing::slurp(err)};
}

// A tiny configuration so every command finishes in well under a second.
fs::path write_config(const fs::path& dir) {
  const std::string corpus = testing::source_path("data/corpus100.csv").string();
  const std::string yaml = "output_dir: out\n"
                           "data:\n  pretrain: " + corpus + "\n  finetune: " + corpus + "\n"
                           "schedule:\n  steps: 5\n"
                           "encoder:\n  latent_dim: 4\n  n_layers: 1\n  n_heads: 2\n  d_model: 8\n  d_ff: 8\n"
                           "decoder:\n  n_layers: 1\n  n_heads: 2\n  d_model: 8\n  d_ff: 8\n"
                           "denoiser:\n  hidden: 8\n"
                           "head:\n  hidden: 8\n"
                           "train:\n  steps: 3\n"
                           "finetune:\n  steps: 3\n";
  std::ofstream(dir / "run.yaml") << yaml;
  return dir / "run.yaml";
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = testing::scratch_dir("cli");
    write_config(dir_);
    const CliRun r = run(dir_, "-c run.yaml pretrain");
    ASSERT_EQ(r.exit_code, 0) << r.err;
  }
  static fs::path dir_;
};

fs::path CliTest::dir_;

TEST_F(CliTest, PretrainWritesArtifacts) {
  for (const char* name : {"pretrain.ckpt", "metrics.csv", "pretrain_meta.json", "pretrain_rejects.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "out" / name)) << name;
  }
  const std::string metrics = testing::slurp(dir_ / "out" / "metrics.csv");
  EXPECT_EQ(metrics.rfind("step,recon,prior_kl,denoise,elbo,grad_norm\n", 0), 0u);
  EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 4);
}

TEST_F(CliTest, FinetuneAndEvaluate) {
  CliRun r = run(dir_, "-c run.yaml finetune --checkpoint out/pretrain.ckpt");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const std::string table = testing::slurp(dir_ / "out" / "results.csv");
  EXPECT_EQ(table.rfind("dataset,split,model,mse\n", 0), 0u);
  EXPECT_NE(table.find("corpus100,test,diffusion-vae,"), std::string::npos);
  EXPECT_NE(table.find("corpus100,test,graph-transformer,"), std::string::npos);
  r = run(dir_, "-c run.yaml evaluate --checkpoint out/finetuned.ckpt");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("diffusion-vae"), std::string::npos);
}

TEST_F(CliTest, EncodeIsByteIdenticalAcrossRuns) {
  const std::string input = testing::source_path("data/overfit16.csv").string();
  ASSERT_EQ(run(dir_, "-c run.yaml encode --checkpoint out/pretrain.ckpt --input " + input + " --output a.csv").exit_code, 0);
  ASSERT_EQ(run(dir_, "-c run.yaml encode --checkpoint out/pretrain.ckpt --input " + input + " --output b.csv").exit_code, 0);
  const std::string a = testing::slurp(dir_ / "a.csv");
  EXPECT_EQ(a, testing::slurp(dir_ / "b.csv"));
  EXPECT_EQ(a.rfind("smiles,z1_1,z1_2,z1_3,z1_4\n", 0), 0u);
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 17);
}

TEST_F(CliTest, SampleZeroIsEmpty) {
  const CliRun r = run(dir_, "-c run.yaml sample --checkpoint out/pretrain.ckpt -n 0");
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out, "");
}

TEST_F(CliTest, SampleWritesOneSmilesPerLine) {
  const CliRun r = run(dir_, "-c run.yaml sample --checkpoint out/pretrain.ckpt -n 5");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 5);
  EXPECT_EQ(r.out, run(dir_, "-c run.yaml sample --checkpoint out/pretrain.ckpt -n 5").out);
}

TEST_F(CliTest, MissingCheckpointExitsTwoAndNamesPath) {
  const CliRun r = run(dir_, "-c run.yaml sample --checkpoint out/nope.ckpt -n 1");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("out/nope.ckpt"), std::string::npos) << r.err;
}

TEST_F(CliTest, MismatchedArchitectureExitsTwo) {
  std::string yaml = testing::slurp(dir_ / "run.yaml");
  yaml.replace(yaml.find("latent_dim: 4"), 13, "latent_dim: 6");
  std::ofstream(dir_ / "other.yaml") << yaml;
  const CliRun r = run(dir_, "-c other.yaml sample --checkpoint out/pretrain.ckpt -n 1");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("IncompatibleCheckpoint"), std::string::npos) << r.err;
}

TEST_F(CliTest, BadConfigExitsTwo) {
  std::ofstream(dir_ / "bad.yaml") << "unknown_key: 1\n";
  EXPECT_EQ(run(dir_, "-c bad.yaml pretrain").exit_code, 2);
  EXPECT_EQ(run(dir_, "-c missing.yaml pretrain").exit_code, 2);
  EXPECT_EQ(run(dir_, "no-such-command").exit_code, 2);
}

TEST_F(CliTest, PrintDefaultIsLoadable) {
  const CliRun r = run(dir_, "config --print-default");
  ASSERT_EQ(r.exit_code, 0);
  std::ofstream(dir_ / "default.yaml") << r.out;
  const CliRun again = run(dir_, "-c default.yaml config --print-default");
  EXPECT_EQ(again.out, r.out);
}

TEST_F(CliTest, CorruptedScheduleFailsCheck) {
  const CliRun r = run(dir_, "-c run.yaml check --corrupt-alpha-bar");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}

}  // namespace
}  // namespace molddpm
