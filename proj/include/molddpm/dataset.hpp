// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file dataset.hpp
 * @brief CSV ingestion, holdout splits and seeded minibatching.
 *
 * Input files have a header row naming a `smiles` column and, for
 * supervised data, a `target` column. Lines that fail to parse are kept in a
 * rejects list with their 1-based file line number and never reach a split.
 */

#pragma once

#include "molddpm/molgraph.hpp"
#include "molddpm/smiles.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace molddpm {

struct MoleculeRecord {
  std::string smiles;
  MolecularGraph graph;
  std::optional<double> target;
  std::size_t line = 0;
};

struct Reject {
  std::size_t line = 0;
  std::string smiles;
  std::string error;
};

struct LoadResult {
  std::vector<MoleculeRecord> records;
  std::vector<Reject> rejects;
};

struct LoadOptions {
  bool require_target = false;
  int max_nodes = 32;
  AtomAlphabet alphabet = AtomAlphabet::standard();
};

/// Throws IoError when the file cannot be opened, EmptyFile when it has no
/// header, MissingColumn when `smiles` (or a required `target`) is absent.
/// Rows with an unparseable SMILES, a malformed target, or more than
/// max_nodes atoms become rejects.
LoadResult load_csv(const std::filesystem::path& path, const LoadOptions& options);
LoadResult load_csv_text(const std::string& text, const LoadOptions& options);

/// CSV `line,smiles,error`.
std::string rejects_csv(const std::vector<Reject>& rejects);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  void validate() const;
};

struct Split {
  std::vector<MoleculeRecord> train;
  std::vector<MoleculeRecord> test;
};

/// Seeded shuffle, then the first ceil(n * fraction) records go to train.
/// The train share is capped at n - 1 so the test split is never empty.
/// Throws TooFewRecords below two records.
Split holdout_split(const std::vector<MoleculeRecord>& records, const SplitSpec& spec);

/// Zero-mean, unit-variance map fitted on one split.
struct Standardizer {
  double mean = 0.0;
  double stddev = 1.0;

  /// Population statistics; a constant target keeps stddev 1. Throws
  /// InvalidRange when a record has no target and EmptySplit for no records.
  static Standardizer fit(const std::vector<MoleculeRecord>& records);
  double apply(double y) const { return (y - mean) / stddev; }
  std::vector<double> apply(const std::vector<MoleculeRecord>& records) const;
};

struct Minibatch {
  GraphBatch graphs;
  std::vector<double> targets;  // standardized when a Standardizer is given
  std::vector<std::size_t> indices;  // positions in the source records
};

struct BatchOptions {
  int batch_size = 16;
  int max_nodes = 32;
  int num_atom_types = 16;
  int num_bond_types = 5;
};

/// Reshuffled per (seed, epoch); the last batch may be smaller.
std::vector<Minibatch> batches(const std::vector<MoleculeRecord>& records,
                               const BatchOptions& options, std::uint64_t seed,
                               std::uint64_t epoch,
                               const Standardizer* standardizer = nullptr);

/// All records in file order as one batch.
Minibatch full_batch(const std::vector<MoleculeRecord>& records, const BatchOptions& options,
                     const Standardizer* standardizer = nullptr);

/// Cycles through shuffled epochs, handing out one minibatch per call.
class BatchStream {
 public:
  BatchStream(const std::vector<MoleculeRecord>& records, BatchOptions options,
              std::uint64_t seed, const Standardizer* standardizer = nullptr);
  const Minibatch& next();
  std::uint64_t epoch() const { return epoch_; }

 private:
  const std::vector<MoleculeRecord>* records_;
  BatchOptions options_;
  std::uint64_t seed_;
  const Standardizer* standardizer_;
  std::uint64_t epoch_ = 0;
  std::size_t cursor_ = 0;
  std::vector<Minibatch> current_;
};

}  // namespace molddpm
