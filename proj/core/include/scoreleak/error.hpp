#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scoreleak {

enum class ErrorCode {
  // oracle
  InvalidBounds,
  InvalidConfig,
  LabelOutOfBounds,
  EmptyLabels,
  BudgetExhausted,
  LengthMismatch,
  NonFiniteEntry,
  IoFailure,
  InstrumentationDisabled,
  // probe
  AlreadyProbed,
  NormUnknown,
  // mean attack
  BadSegment,
  InfeasibleMean,
  OverlappingSegments,
  BadArity,
  // regression attack
  RankDeficientInput,
  IllConditioned,
  NegativeRadicand,
  // finite-label attack
  TooFewValues,
  DuplicateValues,
  PrecisionBudgetExceeded,
  PackedOutOfRange,
  NoFeasibleSegment,
  LabelOutsideAlphabet,
  // harness / parsing
  BadSpec,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by recover_packed when the inner-product uncertainty, expressed in
/// label-code units, is too wide to round to a unique integer.
class PrecisionBudgetExceeded : public Error {
 public:
  PrecisionBudgetExceeded(double halfwidth, const std::string& detail);

  double halfwidth() const noexcept { return halfwidth_; }

 private:
  double halfwidth_;
};

}  // namespace scoreleak
