#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace xrt {

enum class ErrorCode {
  // core
  NegativeMass,
  NotNormalized,
  ZeroMass,
  InvalidLabelSpace,
  InvalidExample,
  // model
  InvalidConfig,
  DimensionMismatch,
  MalformedLine,
  EmptySequence,
  IndexOutOfVocab,
  EmptyBatch,
  // loss / metrics
  EmptyRows,
  LengthMismatch,
  Empty,
  // train
  ShapeMismatch,
  EmptySets,
  EmptySetMember,
  EmptyData,
  EmptyCandidates,
  // transfer
  EmptyPairs,
  MissingTableRow,
  LabelSpaceMismatch,
  // frag
  Unbalanced,
  EmptyTree,
  MalformedNode,
  PivotNotInTree,
  MissingTree,
  // io / cli
  MissingHeader,
  DuplicateId,
  BadSpan,
  MalformedRecord,
  UnsupportedVersion,
  ChecksumMismatch,
  Io,
  UnknownCommand,
  MissingFlag,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. `value()` carries the numeric
/// detail some errors report (the sum for NotNormalized, the character
/// offset for Unbalanced, the line number for MalformedLine).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<double> value = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        value_(value) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<double> value() const noexcept { return value_; }

 private:
  ErrorCode code_;
  std::optional<double> value_;
};

}  // namespace xrt
