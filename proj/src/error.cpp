// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/error.hpp"

namespace molddpm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSymbol: return "UnknownSymbol";
    case ErrorCode::UnterminatedBracketAtom: return "UnterminatedBracketAtom";
    case ErrorCode::UnmatchedRingBond: return "UnmatchedRingBond";
    case ErrorCode::BranchUnderflow: return "BranchUnderflow";
    case ErrorCode::BranchOverflow: return "BranchOverflow";
    case ErrorCode::UnsupportedFeature: return "UnsupportedFeature";
    case ErrorCode::ConflictingRingBond: return "ConflictingRingBond";
    case ErrorCode::UnserializableGraph: return "UnserializableGraph";
    case ErrorCode::MalformedSmiles: return "MalformedSmiles";
    case ErrorCode::InvalidGraph: return "InvalidGraph";
    case ErrorCode::GraphTooLarge: return "GraphTooLarge";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::StepOutOfRange: return "StepOutOfRange";
    case ErrorCode::DegenerateSchedule: return "DegenerateSchedule";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::TooFewRecords: return "TooFewRecords";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IncompatibleCheckpoint: return "IncompatibleCheckpoint";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
  }
  return "Unknown";
}

std::string Error::format(ErrorCode code, const std::string& message,
                          std::optional<std::size_t> position) {
  std::string out(to_string(code));
  if (position) out += " at position " + std::to_string(*position);
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace molddpm
