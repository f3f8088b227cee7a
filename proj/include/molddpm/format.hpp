// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <string>

namespace molddpm {

/// Shortest decimal that parses back to exactly `x`.
inline std::string real(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, end);
}

}  // namespace molddpm
