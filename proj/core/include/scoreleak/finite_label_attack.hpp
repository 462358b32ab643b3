#pragma once

// Exact label recovery for finite label alphabets.
//
// Labels are mapped to integer codes z with y = offset + step * z. Scoring the
// submission [1, c, c^2, ...] (zeros outside the segment) yields
// <s, y> = offset * sum(s) + step * p, where p = sum z_k c^k packs the whole
// segment into one integer; base-c digits of p give the codes back. When the
// alphabet is evenly spaced the codes are exactly 0..c-1 and the radix equals
// the alphabet size.

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "scoreleak/mean_attack.hpp"
#include "scoreleak/numeric.hpp"
#include "scoreleak/oracle.hpp"
#include "scoreleak/probe.hpp"

namespace scoreleak {

using PackedInteger = BigInt;

class LabelAlphabet {
 public:
  const std::vector<double>& values() const noexcept { return values_; }
  /// Number of distinct label values.
  std::size_t size() const noexcept { return values_.size(); }

  /// Throws LabelOutsideAlphabet.
  std::size_t index_of(double value) const;
  double value_at(std::size_t index) const { return values_.at(index); }

  /// Smallest value; the code origin.
  const Rational& offset() const noexcept { return offset_; }
  /// Largest rational step dividing every gap between values.
  const Rational& step() const noexcept { return step_; }
  const BigInt& code_of_index(std::size_t index) const { return codes_.at(index); }
  /// Throws LabelOutsideAlphabet when no value has this code.
  std::size_t index_of_code(const BigInt& code) const;
  /// Largest code + 1; equals size() for evenly spaced alphabets.
  const BigInt& radix() const noexcept { return radix_; }
  bool evenly_spaced() const { return radix_ == BigInt(values_.size()); }
  bool nonnegative() const noexcept { return values_.front() >= 0.0; }
  /// max |value|.
  double magnitude() const noexcept;

 private:
  friend LabelAlphabet make_codec(std::span<const double> values);

  std::vector<double> values_;
  Rational offset_;
  Rational step_;
  std::vector<BigInt> codes_;
  std::map<BigInt, std::size_t> index_by_code_;
  BigInt radix_;
};

/// Sorted bijection between the label values and 0..c-1.
/// Throws TooFewValues, DuplicateValues or NonFiniteEntry.
LabelAlphabet make_codec(std::span<const double> values);

/// Zeros outside `segment`; entry k of the segment (0-based) is radix^k.
/// Throws BadSegment.
Submission encode_submission(const Segment& segment, const BigInt& radix, std::size_t n);

/// Scores encode_submission(segment, codec.radix()) and rounds the packed
/// code integer. Throws PrecisionBudgetExceeded when the half-width in code
/// units is >= 0.5, PackedOutOfRange when the rounded value cannot be a
/// packing of `segment`, plus NormUnknown and BudgetExhausted.
PackedInteger recover_packed(Oracle& oracle, KnowledgeState& state, const Segment& segment,
                             const LabelAlphabet& codec);

/// Base-radix digits of p, least significant first.
/// Throws PackedOutOfRange unless 0 <= p < radix^length.
std::vector<BigInt> decode_labels(const PackedInteger& packed, const BigInt& radix,
                                  std::size_t length);

struct FiniteLabelPlan {
  std::vector<Segment> segments;
  std::size_t per_segment_length_cap = 0;
  QuantizationMode mode;
};

/// Upper bound on the norm-probe half-width before probing:
/// n * (2 * max|v| * eps + eps^2).
Rational worst_case_norm_halfwidth(std::size_t n, const LabelAlphabet& codec,
                                   const QuantizationMode& mode);

/// Exact mode: one segment covering 1..n. Quantized mode: the largest segment
/// length whose worst-case code half-width, doubled, stays below 0.5, and a
/// balanced partition with segments no longer than that.
/// Throws NoFeasibleSegment.
FiniteLabelPlan plan_segments(std::size_t n, const LabelAlphabet& codec,
                              const QuantizationMode& mode, const Rational& y_sq_halfwidth);

/// Same, for the integer alphabet {0, ..., c-1}.
FiniteLabelPlan plan_segments(std::size_t n, std::size_t c, const QuantizationMode& mode,
                              const Rational& y_sq_halfwidth);

struct FiniteLabelResult {
  std::vector<double> labels;
  std::size_t submissions_used = 0;
};

/// Probes the norm if needed, then recovers and decodes every planned segment.
FiniteLabelResult run_attack(Oracle& oracle, KnowledgeState& state, const LabelAlphabet& codec,
                             const FiniteLabelPlan& plan);

}  // namespace scoreleak
