// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "molddpm/model.hpp"
#include "molddpm/molgraph.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace molddpm::testing {

inline std::filesystem::path source_path(const std::string& relative) {
  return std::filesystem::path(MOLDDPM_SOURCE_DIR) / relative;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("molddpm_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// A model small enough for finite differences and quick training loops.
inline ModelConfig small_model_config(int max_nodes = 6, int steps = 10) {
  ModelConfig c;
  c.max_nodes = max_nodes;
  c.diffusion_steps = steps;
  c.encoder.latent_dim = 4;
  c.encoder.n_layers = 1;
  c.encoder.n_heads = 2;
  c.encoder.d_model = 8;
  c.encoder.d_ff = 16;
  c.decoder.n_layers = 1;
  c.decoder.n_heads = 2;
  c.decoder.d_model = 8;
  c.decoder.d_ff = 16;
  c.denoiser.hidden = 8;
  return c;
}

/// Labelled-graph isomorphism by backtracking; candidates are pruned by node
/// type and by the bonds to already-mapped nodes.
inline bool isomorphic(const MolecularGraph& a, const MolecularGraph& b) {
  const int n = a.num_nodes();
  if (n != b.num_nodes() || a.bond_count() != b.bond_count()) return false;
  std::vector<int> map(static_cast<std::size_t>(n), -1);
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  const auto degree = [](const MolecularGraph& g, int i) {
    int d = 0;
    for (int j = 0; j < g.num_nodes(); ++j) d += g.bond(i, j) != 0;
    return d;
  };
  const auto extend = [&](auto&& self, int i) -> bool {
    if (i == n) return true;
    for (int c = 0; c < n; ++c) {
      if (used[static_cast<std::size_t>(c)] || a.node_type(i) != b.node_type(c) ||
          degree(a, i) != degree(b, c)) {
        continue;
      }
      bool ok = true;
      for (int k = 0; k < i && ok; ++k) ok = a.bond(i, k) == b.bond(c, map[static_cast<std::size_t>(k)]);
      if (!ok) continue;
      map[static_cast<std::size_t>(i)] = c;
      used[static_cast<std::size_t>(c)] = true;
      if (self(self, i + 1)) return true;
      used[static_cast<std::size_t>(c)] = false;
    }
    map[static_cast<std::size_t>(i)] = -1;
    return false;
  };
  return extend(extend, 0);
}

}  // namespace molddpm::testing
