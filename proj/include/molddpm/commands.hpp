// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file commands.hpp
 * @brief The pipeline stages behind the command-line tool.
 *
 * Every command is a pure function of (config, inputs). Artifacts are written
 * atomically into config.output_dir; wall-clock timestamps appear only in the
 * <command>_meta.json sidecar.
 *
 * Rng streams derived from config.seed:
 *   1 model init, 2 pretrain noise, 3 pretrain batches, 4 head init,
 *   5 finetune noise, 6 finetune batches, 7 sampling,
 *   8 baseline init, 9 baseline noise. The baseline reuses stream 6 so both
 *   models see the same minibatches.
 */

#pragma once

#include "molddpm/checkpoint.hpp"
#include "molddpm/config.hpp"
#include "molddpm/diagnostics.hpp"
#include "molddpm/error.hpp"
#include "molddpm/molgraph.hpp"
#include "molddpm/property_head.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace molddpm {

namespace streams {
inline constexpr std::uint64_t kModelInit = 1, kPretrainNoise = 2, kPretrainBatches = 3,
                               kHeadInit = 4, kFinetuneNoise = 5, kFinetuneBatches = 6,
                               kSampling = 7, kBaselineInit = 8, kBaselineNoise = 9;
}

// ---------------------------------------------------------------------------
// Checkpoint <-> parameters

/// Node-count histogram of the pretraining set, indexed by count.
using SizeHistogram = std::vector<double>;

struct TrainedModel {
  ModelParams model;
  std::optional<HeadParams> head;
  std::optional<Standardizer> standardizer;
  SizeHistogram sizes;
};

Checkpoint make_checkpoint(const RunConfig& config, const TrainedModel& trained);
/// Throws IncompatibleCheckpoint when a tensor is missing or mis-shaped.
TrainedModel restore(const RunConfig& config, const Checkpoint& ckpt);
TrainedModel load_trained(const RunConfig& config, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Commands

struct PretrainResult {
  std::filesystem::path checkpoint;
  std::filesystem::path metrics;
  ReconstructionAccuracy accuracy;  // noiseless z1 on the full training set
  ElboBreakdown last;
};

/// Trains encoder, decoder and denoiser on config.data.pretrain by -elbo.
/// Writes pretrain.ckpt, metrics.csv, pretrain_rejects.csv and pretrain_meta.json.
PretrainResult cmd_pretrain(const RunConfig& config, std::ostream* progress = nullptr);

struct MseRow {
  std::string dataset;
  std::string split;
  std::string model;
  double mse = 0.0;
};

struct FinetuneResult {
  std::filesystem::path checkpoint;
  std::vector<MseRow> table;
  double test_mse = 0.0;
  std::optional<double> baseline_test_mse;
};

/// Model tags used in result tables.
inline constexpr const char* kJointModelTag = "diffusion-vae";
inline constexpr const char* kBaselineModelTag = "graph-transformer";
inline constexpr const char* kMeanModelTag = "train-mean";

/// Fine-tunes a pretrained checkpoint on config.data.finetune with the joint
/// loss. With `baseline`, also trains a freshly initialised encoder and head
/// on the regression loss alone, on the same split, seed and step count.
/// Writes finetuned.ckpt, results.csv, finetune_rejects.csv, finetune_meta.json.
FinetuneResult cmd_finetune(const RunConfig& config, const std::filesystem::path& checkpoint,
                            bool baseline = true, std::ostream* progress = nullptr);

/// Recomputes the results table for a fine-tuned checkpoint.
std::vector<MseRow> cmd_evaluate(const RunConfig& config, const std::filesystem::path& checkpoint);

std::string mse_table_csv(const std::vector<MseRow>& rows);

/// Writes CSV `smiles,z1_1..z1_d` of noiseless latents to `output` and the
/// unparseable lines to `output` + ".rejects.csv". Returns the row count.
std::size_t cmd_encode(const RunConfig& config, const std::filesystem::path& checkpoint,
                       const std::filesystem::path& input, const std::filesystem::path& output);

/// Draws `n` molecules by ancestral sampling, greedy decoding and writing.
/// Node counts come from the checkpoint's size histogram.
std::vector<std::string> cmd_sample(const RunConfig& config,
                                    const std::filesystem::path& checkpoint, int n);

std::vector<CheckResult> cmd_check(const RunConfig& config, const CheckOptions& options = {});

/// Exit status the CLI uses for an error code: 2 for usage and I/O problems,
/// 1 otherwise.
int exit_code_for(ErrorCode code);

}  // namespace molddpm
