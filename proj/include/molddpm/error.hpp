// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace molddpm {

enum class ErrorCode {
  // smiles
  UnknownSymbol,
  UnterminatedBracketAtom,
  UnmatchedRingBond,
  BranchUnderflow,
  BranchOverflow,
  UnsupportedFeature,
  ConflictingRingBond,
  UnserializableGraph,
  MalformedSmiles,
  // graphs and tensors
  InvalidGraph,
  GraphTooLarge,
  ShapeMismatch,
  // schedule and diffusion
  InvalidRange,
  StepOutOfRange,
  DegenerateSchedule,
  // numerics
  NonFiniteActivation,
  NonFiniteGradient,
  // data and io
  MissingColumn,
  EmptyFile,
  TooFewRecords,
  EmptySplit,
  IoError,
  InvalidConfig,
  IncompatibleCheckpoint,
  CorruptCheckpoint,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. `position()` is set for errors
/// that point into an input string (SMILES character offsets).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> position = std::nullopt)
      : std::runtime_error(format(code, message, position)),
        code_(code),
        position_(position),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> position() const noexcept { return position_; }
  /// The message without the code and position prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  static std::string format(ErrorCode code, const std::string& message,
                            std::optional<std::size_t> position);

  ErrorCode code_;
  std::optional<std::size_t> position_;
  std::string message_;
};

}  // namespace molddpm
