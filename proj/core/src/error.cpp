#include "scoreleak/error.hpp"

namespace scoreleak {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidBounds: return "InvalidBounds";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::LabelOutOfBounds: return "LabelOutOfBounds";
    case ErrorCode::EmptyLabels: return "EmptyLabels";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InstrumentationDisabled: return "InstrumentationDisabled";
    case ErrorCode::AlreadyProbed: return "AlreadyProbed";
    case ErrorCode::NormUnknown: return "NormUnknown";
    case ErrorCode::BadSegment: return "BadSegment";
    case ErrorCode::InfeasibleMean: return "InfeasibleMean";
    case ErrorCode::OverlappingSegments: return "OverlappingSegments";
    case ErrorCode::BadArity: return "BadArity";
    case ErrorCode::RankDeficientInput: return "RankDeficientInput";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::NegativeRadicand: return "NegativeRadicand";
    case ErrorCode::TooFewValues: return "TooFewValues";
    case ErrorCode::DuplicateValues: return "DuplicateValues";
    case ErrorCode::PrecisionBudgetExceeded: return "PrecisionBudgetExceeded";
    case ErrorCode::PackedOutOfRange: return "PackedOutOfRange";
    case ErrorCode::NoFeasibleSegment: return "NoFeasibleSegment";
    case ErrorCode::LabelOutsideAlphabet: return "LabelOutsideAlphabet";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& detail) {
  std::string message(to_string(code));
  if (!detail.empty()) {
    message += ": ";
    message += detail;
  }
  return message;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(compose(code, detail)), code_(code) {}

PrecisionBudgetExceeded::PrecisionBudgetExceeded(double halfwidth, const std::string& detail)
    : Error(ErrorCode::PrecisionBudgetExceeded, detail), halfwidth_(halfwidth) {}

}  // namespace scoreleak
