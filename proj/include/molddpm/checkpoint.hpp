// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file checkpoint.hpp
 * @brief Binary parameter snapshots.
 *
 * Layout (little-endian):
 *
 *   "MOLDDPM\0" | u32 version | u64 architecture hash | u64 len, config YAML
 *   u64 tensor count, then per tensor:
 *     u32 name len, name | u32 rank (2) | u64 rows, u64 cols | f64 row-major data
 *   u64 FNV-1a of every preceding byte
 *
 * Files are written to a temporary sibling and renamed into place.
 */

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace molddpm {

struct Checkpoint {
  std::uint64_t architecture_hash = 0;
  std::string config_yaml;
  std::map<std::string, Eigen::MatrixXd> tensors;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws CorruptCheckpoint on a bad magic, version, checksum, or truncation.
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws IoError when the file is missing, CorruptCheckpoint when it does not
/// parse, IncompatibleCheckpoint when `expected_hash` differs from the stored one.
Checkpoint load_checkpoint(const std::filesystem::path& path, std::uint64_t expected_hash);

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`. Creates missing parent directories.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace molddpm
