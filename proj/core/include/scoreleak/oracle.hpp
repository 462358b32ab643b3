#pragma once

// Simulated leaderboard: the hidden ground truth plus an RMSE scoring endpoint
// with a submission budget and optional score rounding.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scoreleak/numeric.hpp"

namespace scoreleak {

/// Closed label range [lo, hi], known to the attacker.
struct Bounds {
  double lo = 0.0;
  double hi = 0.0;

  /// Validates lo <= hi and finiteness; throws InvalidBounds.
  static Bounds make(double lo, double hi);

  bool contains(double value) const noexcept { return value >= lo && value <= hi; }
  double magnitude() const noexcept;  // max(|lo|, |hi|)

  friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct GroundTruth {
  std::vector<double> labels;
  Bounds bounds;

  /// Throws EmptyLabels, NonFiniteEntry or LabelOutOfBounds.
  static GroundTruth make(std::vector<double> labels, Bounds bounds);

  std::size_t size() const noexcept { return labels.size(); }
};

/// How the oracle reports scores: exactly, or rounded half-to-even to a fixed
/// number of decimal digits.
class QuantizationMode {
 public:
  static constexpr int kMinDigits = 1;
  static constexpr int kMaxDigits = 15;

  static QuantizationMode exact() noexcept { return QuantizationMode(0); }
  /// Throws InvalidConfig unless 1 <= digits <= 15.
  static QuantizationMode quantized(int digits);
  /// "exact" or "quantized:<d>".
  static QuantizationMode parse(std::string_view text);

  bool is_exact() const noexcept { return digits_ == 0; }
  int digits() const noexcept { return digits_; }

  /// Worst-case rounding error of a reported score: 0, or 0.5 * 10^-d.
  Rational epsilon() const;

  std::string to_string() const;

  friend bool operator==(const QuantizationMode&, const QuantizationMode&) = default;

 private:
  explicit QuantizationMode(int digits) noexcept : digits_(digits) {}

  int digits_;
};

struct OracleConfig {
  QuantizationMode mode = QuantizationMode::exact();
  std::size_t budget = 0;
  /// Allows test code to read the hidden labels. Off by default.
  bool test_instrumentation = false;
};

/// A reported RMSE. In exact mode the score is carried as the exact mean
/// squared error, i.e. the square root is never rounded away; in quantized
/// mode it is an integer multiple of 10^-d.
class ReportedScore {
 public:
  static ReportedScore exact(Rational mean_squared);
  static ReportedScore quantized(BigInt scaled, int digits);

  /// Nearest double to the reported RMSE.
  double value() const;
  /// The reported RMSE squared, exactly.
  const Rational& squared() const noexcept { return squared_; }
  /// The reported RMSE itself, exactly. Quantized mode only.
  Rational decimal() const;
  int digits() const noexcept { return digits_; }

  /// Exact decimal in quantized mode, 17 significant digits in exact mode.
  std::string text() const;

 private:
  ReportedScore() = default;

  Rational squared_;
  BigInt scaled_;
  int digits_ = 0;
};

struct OracleReading {
  ReportedScore score;
  QuantizationMode mode;
  std::size_t submission_index = 0;

  double rmse() const { return score.value(); }
};

/// A prediction vector. Entries are exact rationals so that arbitrarily large
/// integers (powers of the label radix) and arbitrary doubles coexist.
class Submission {
 public:
  Submission() = default;
  explicit Submission(std::vector<Rational> entries);

  /// Throws NonFiniteEntry.
  static Submission from_doubles(std::span<const double> values);
  static Submission zeros(std::size_t n);

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<Rational>& entries() const noexcept { return entries_; }
  const Rational& operator[](std::size_t i) const { return entries_[i]; }

  Rational squared_norm() const;
  Rational sum() const;
  bool is_zero() const;

  /// Entries rendered by format_exact, comma separated.
  std::string canonical_text() const;
  /// Hex SHA-256 of canonical_text().
  std::string digest() const;

  std::vector<double> to_doubles() const;

 private:
  std::vector<Rational> entries_;
};

struct SubmissionRecord {
  std::size_t submission_index = 0;
  std::string payload_digest;
  OracleReading reading;
  std::string purpose_tag;
};

/// Not thread-safe: evaluate() mutates the budget and log, so calls must be
/// serialized by the caller. Const members are safe between mutations.
class Oracle {
 public:
  /// Throws EmptyLabels, NonFiniteEntry, LabelOutOfBounds, InvalidBounds.
  Oracle(std::vector<double> labels, Bounds bounds, OracleConfig config);
  Oracle(GroundTruth truth, OracleConfig config);

  /// Scores a submission. Entries may lie outside the label bounds.
  /// Throws BudgetExhausted or LengthMismatch.
  OracleReading evaluate(const Submission& submission, std::string_view tag = {});

  std::size_t size() const noexcept { return truth_.size(); }
  const Bounds& bounds() const noexcept { return truth_.bounds; }
  const OracleConfig& config() const noexcept { return config_; }
  const QuantizationMode& mode() const noexcept { return config_.mode; }
  std::size_t remaining_budget() const noexcept { return config_.budget - log_.size(); }
  std::span<const SubmissionRecord> log() const noexcept { return log_; }

  /// Writes one JSON object per line: index, digest, rmse, mode, tag.
  /// Returns the record count. Throws IoFailure.
  std::size_t export_log(const std::filesystem::path& destination) const;

  /// Test-only view of the hidden labels. Throws InstrumentationDisabled
  /// unless the oracle was configured with test_instrumentation.
  std::span<const double> reveal_labels_for_testing() const;

 private:
  Rational squared_error(const Submission& submission) const;

  GroundTruth truth_;
  std::vector<Rational> exact_labels_;
  OracleConfig config_;
  std::vector<SubmissionRecord> log_;
};

/// Serializes one log record as a single-line JSON object.
std::string log_line(const SubmissionRecord& record);

}  // namespace scoreleak
