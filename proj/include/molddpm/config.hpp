// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file config.hpp
 * @brief Run configuration: one YAML tree holding every module's settings.
 */

#pragma once

#include "molddpm/dataset.hpp"
#include "molddpm/model.hpp"
#include "molddpm/objective.hpp"
#include "molddpm/property_head.hpp"
#include "molddpm/smiles.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace molddpm {

struct ScheduleConfig {
  int steps = 50;
  double beta_start = 1e-4;
  double beta_end = 0.02;
};

struct DataConfig {
  std::string pretrain = "data/corpus100.csv";
  std::string finetune = "data/corpus100.csv";
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";
  DataConfig data;
  int max_nodes = 32;
  std::vector<std::string> atom_symbols = AtomAlphabet::standard().symbols();
  ScheduleConfig schedule;
  EncoderConfig encoder;
  DecoderConfig decoder;
  DenoiserConfig denoiser;
  HeadConfig head;
  TrainConfig train;
  FinetuneConfig finetune;
  double train_fraction = 0.8;
  /// Metrics log cadence in steps; 1 logs every step.
  int log_every = 1;

  /// Throws InvalidConfig on any out-of-range field.
  void validate() const;

  AtomAlphabet alphabet() const { return AtomAlphabet(atom_symbols); }
  NoiseSchedule make_schedule() const;
  ModelConfig model_config() const;
  SplitSpec split_spec() const { return {train_fraction, seed}; }
  BatchOptions batch_options(int batch_size) const;
  LoadOptions load_options(bool require_target) const;

  /// FNV-1a over the fields that fix parameter shapes and the schedule.
  std::uint64_t architecture_hash() const;
};

/// Parses YAML text; keys absent from the text keep their defaults and
/// unknown keys are rejected. Throws InvalidConfig.
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::filesystem::path& path);

/// YAML with an inline comment on every field. Reals are written with 17
/// significant digits so parse_config(to_yaml(c)) == c.
std::string to_yaml(const RunConfig& config);

/// Environment variable that overrides output_dir when set and non-empty.
inline constexpr const char* kOutputDirEnv = "MOLDDPM_OUTPUT_DIR";
void apply_environment(RunConfig& config);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace molddpm
