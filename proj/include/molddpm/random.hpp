// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace molddpm {

using Rng = std::mt19937_64;

/// Independent deterministic stream for (seed, stream). Used wherever a
/// computation must be keyed by more than one integer, e.g. (seed, epoch).
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

inline Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols,
                                       Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(rows, cols);
  // Row-major fill so draws do not depend on Eigen's storage order.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  }
  return out;
}

}  // namespace molddpm
