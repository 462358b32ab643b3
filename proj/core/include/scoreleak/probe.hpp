#pragma once

// Inner-product extraction from RMSE scores.
//
// One all-zeros submission reveals ||y||^2 = n * rmse^2. After that, any
// submission s yields <s, y> = (||s||^2 + ||y||^2 - n * rmse(s)^2) / 2, since
// ||s||^2 is known locally. Under a quantized oracle each reported score is
// off by at most eps = 0.5 * 10^-d, so every learned quantity carries a
// rigorous half-width: |n*r'^2 - n*r^2| <= n * (2*r'*eps + eps^2).

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "scoreleak/numeric.hpp"
#include "scoreleak/oracle.hpp"

namespace scoreleak {

struct InnerProductRecord {
  Rational value;      // <s, y>
  Rational halfwidth;  // 0 in exact mode
  Rational hat_y_sq;   // ||s||^2
  ReportedScore rmse_seen;

  double approx() const { return to_double(value); }
  double halfwidth_approx() const { return to_double(halfwidth); }
};

/// Everything the attacker has learned so far. Mutated only by probe_norm and
/// inner_product; external serialization is required alongside the oracle.
class KnowledgeState {
 public:
  KnowledgeState(std::size_t n, QuantizationMode mode);
  static KnowledgeState for_oracle(const Oracle& oracle);

  std::size_t size() const noexcept { return n_; }
  const QuantizationMode& mode() const noexcept { return mode_; }

  bool has_norm() const noexcept { return y_sq_.has_value(); }
  /// Throws NormUnknown.
  const Rational& y_sq() const;
  const Rational& y_sq_halfwidth() const noexcept { return y_sq_halfwidth_; }

  const InnerProductRecord* find(std::string_view digest) const;
  const std::map<std::string, InnerProductRecord, std::less<>>& cache() const noexcept {
    return cache_;
  }

  /// Checkpoint with keys n, mode, y_sq, y_sq_halfwidth, cache. Exact values
  /// are stored as canonical decimal strings.
  nlohmann::json to_json() const;
  static KnowledgeState from_json(const nlohmann::json& doc);

 private:
  friend Rational probe_norm(Oracle& oracle, KnowledgeState& state);
  friend InnerProductRecord inner_product(Oracle& oracle, KnowledgeState& state,
                                          const Submission& submission, std::string_view tag);

  std::size_t n_;
  QuantizationMode mode_;
  std::optional<Rational> y_sq_;
  Rational y_sq_halfwidth_;
  std::map<std::string, InnerProductRecord, std::less<>> cache_;
};

/// Submits all zeros and records ||y||^2. Throws AlreadyProbed or
/// BudgetExhausted.
Rational probe_norm(Oracle& oracle, KnowledgeState& state);

/// <submission, y> with its half-width. Cache hits (by payload digest) are
/// free. Throws NormUnknown, LengthMismatch or BudgetExhausted.
InnerProductRecord inner_product(Oracle& oracle, KnowledgeState& state,
                                 const Submission& submission, std::string_view tag = {});

/// Half-width of an inner product derived from `reading`:
/// (y_sq_halfwidth + n * (2 * rmse * eps + eps^2)) / 2. Throws NormUnknown.
Rational ip_halfwidth(const OracleReading& reading, const KnowledgeState& state);

/// n * (2 * rmse * eps + eps^2): uncertainty of n * rmse^2 for a reported rmse.
Rational scaled_square_halfwidth(const ReportedScore& score, const QuantizationMode& mode,
                                 std::size_t n);

}  // namespace scoreleak
