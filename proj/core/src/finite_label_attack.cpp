#include "scoreleak/finite_label_attack.hpp"

#include <algorithm>
#include <cmath>

#include "scoreleak/error.hpp"

namespace scoreleak {

namespace {

Rational rational_gcd(const Rational& a, const Rational& b) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  if (a == 0) {
    return b;
  }
  if (b == 0) {
    return a;
  }
  // gcd(p/q, r/s) = gcd(p*s, r*q) / (q*s)
  const BigInt top = boost::multiprecision::gcd(numerator(a) * denominator(b),
                                                numerator(b) * denominator(a));
  return Rational(top, denominator(a) * denominator(b));
}

}  // namespace

LabelAlphabet make_codec(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  for (const double v : sorted) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFiniteEntry, "alphabet values must be finite");
    }
  }
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::DuplicateValues, "alphabet values must be distinct");
  }
  if (sorted.size() < 2) {
    throw Error(ErrorCode::TooFewValues, "alphabet needs at least two values");
  }

  LabelAlphabet codec;
  codec.values_ = std::move(sorted);
  codec.offset_ = to_rational(codec.values_.front());
  for (const double v : codec.values_) {
    codec.step_ = rational_gcd(codec.step_, to_rational(v) - codec.offset_);
  }
  for (std::size_t i = 0; i < codec.values_.size(); ++i) {
    const Rational code = (to_rational(codec.values_[i]) - codec.offset_) / codec.step_;
    codec.codes_.push_back(boost::multiprecision::numerator(code));
    codec.index_by_code_.emplace(codec.codes_.back(), i);
  }
  codec.radix_ = codec.codes_.back() + 1;
  return codec;
}

std::size_t LabelAlphabet::index_of(double value) const {
  const auto it = std::lower_bound(values_.begin(), values_.end(), value);
  if (it == values_.end() || *it != value) {
    throw Error(ErrorCode::LabelOutsideAlphabet, format_shortest(value) + " is not in the alphabet");
  }
  return static_cast<std::size_t>(it - values_.begin());
}

std::size_t LabelAlphabet::index_of_code(const BigInt& code) const {
  const auto it = index_by_code_.find(code);
  if (it == index_by_code_.end()) {
    throw Error(ErrorCode::LabelOutsideAlphabet, "code " + code.str() + " names no label value");
  }
  return it->second;
}

double LabelAlphabet::magnitude() const noexcept {
  return std::max(std::abs(values_.front()), std::abs(values_.back()));
}

Submission encode_submission(const Segment& segment, const BigInt& radix, std::size_t n) {
  const Segment checked = Segment::make(segment.start, segment.end, n);
  std::vector<Rational> entries(n);
  BigInt power = 1;
  for (std::size_t i = checked.start; i <= checked.end; ++i) {
    entries[i - 1] = Rational(power);
    power *= radix;
  }
  return Submission(std::move(entries));
}

PackedInteger recover_packed(Oracle& oracle, KnowledgeState& state, const Segment& segment,
                             const LabelAlphabet& codec) {
  const Submission probe = encode_submission(segment, codec.radix(), state.size());
  const InnerProductRecord record =
      inner_product(oracle, state, probe,
                    "finite-label:" + std::to_string(segment.start) + "-" +
                        std::to_string(segment.end));

  const Rational code_value = (record.value - codec.offset() * probe.sum()) / codec.step();
  const Rational code_halfwidth = record.halfwidth / codec.step();
  if (code_halfwidth >= Rational(1, 2)) {
    throw PrecisionBudgetExceeded(to_double(code_halfwidth),
                                  "packed value uncertainty " + format_shortest(to_double(
                                      code_halfwidth)) + " cannot be rounded reliably");
  }

  PackedInteger packed = round_half_even(code_value);
  if (packed < 0 || packed >= pow_int(codec.radix(), segment.length())) {
    throw Error(ErrorCode::PackedOutOfRange,
                "recovered packing is outside [0, radix^" + std::to_string(segment.length()) + ")");
  }
  return packed;
}

std::vector<BigInt> decode_labels(const PackedInteger& packed, const BigInt& radix,
                                  std::size_t length) {
  if (radix < 2) {
    throw Error(ErrorCode::TooFewValues, "radix must be at least 2");
  }
  if (packed < 0 || packed >= pow_int(radix, length)) {
    throw Error(ErrorCode::PackedOutOfRange, "packed value does not fit " +
                                                 std::to_string(length) + " digits");
  }
  std::vector<BigInt> digits;
  digits.reserve(length);
  BigInt rest = packed;
  BigInt digit;
  for (std::size_t i = 0; i < length; ++i) {
    boost::multiprecision::divide_qr(rest, radix, rest, digit);
    digits.push_back(digit);
  }
  return digits;
}

Rational worst_case_norm_halfwidth(std::size_t n, const LabelAlphabet& codec,
                                   const QuantizationMode& mode) {
  const Rational eps = mode.epsilon();
  return Rational(n) * (Rational(2) * to_rational(codec.magnitude()) * eps + eps * eps);
}

FiniteLabelPlan plan_segments(std::size_t n, const LabelAlphabet& codec,
                              const QuantizationMode& mode, const Rational& y_sq_halfwidth) {
  if (n == 0) {
    throw Error(ErrorCode::BadArity, "nothing to plan for n = 0");
  }
  if (mode.is_exact()) {
    return FiniteLabelPlan{{Segment{1, n}}, n, mode};
  }

  // Requirement per segment length L:
  //   2 * (y_sq_halfwidth + n * (2 * rmse * eps + eps^2)) / 2 / step < 1/2,
  // with rmse^2 bounded by (||s||^2 + y_sq_max) / n for nonnegative labels and
  // by 2 * (||s||^2 + y_sq_max) / n otherwise.
  const Rational eps = mode.epsilon();
  const Rational count(n);
  const Rational slack = codec.step() / Rational(2) - y_sq_halfwidth - count * eps * eps;
  const Rational magnitude = to_rational(codec.magnitude());
  const Rational y_sq_max = count * magnitude * magnitude;
  const Rational spread = codec.nonnegative() ? Rational(1) : Rational(2);

  std::size_t cap = 0;
  if (slack > 0) {
    const Rational rmse_limit = slack / (Rational(2) * count * eps);
    const Rational rmse_sq_limit = rmse_limit * rmse_limit;
    const BigInt radix_sq = codec.radix() * codec.radix();
    BigInt term = 1;
    BigInt hat_y_sq = 0;
    for (std::size_t length = 1; length <= n; ++length) {
      hat_y_sq += term;
      term *= radix_sq;
      const Rational rmse_sq_bound = spread * (Rational(hat_y_sq) + y_sq_max) / count;
      if (!(rmse_sq_bound < rmse_sq_limit)) {
        break;
      }
      cap = length;
    }
  }
  if (cap == 0) {
    throw Error(ErrorCode::NoFeasibleSegment,
                "oracle rounding to " + std::to_string(mode.digits()) +
                    " digits is too coarse even for single-label segments");
  }

  const std::size_t count_segments = (n + cap - 1) / cap;
  return FiniteLabelPlan{plan_partition(n, count_segments), cap, mode};
}

FiniteLabelPlan plan_segments(std::size_t n, std::size_t c, const QuantizationMode& mode,
                              const Rational& y_sq_halfwidth) {
  std::vector<double> values(c);
  for (std::size_t i = 0; i < c; ++i) {
    values[i] = static_cast<double>(i);
  }
  return plan_segments(n, make_codec(values), mode, y_sq_halfwidth);
}

FiniteLabelResult run_attack(Oracle& oracle, KnowledgeState& state, const LabelAlphabet& codec,
                             const FiniteLabelPlan& plan) {
  const std::size_t before = oracle.log().size();
  if (!state.has_norm()) {
    probe_norm(oracle, state);
  }

  FiniteLabelResult result;
  result.labels.assign(state.size(), 0.0);
  for (const Segment& segment : plan.segments) {
    const PackedInteger packed = recover_packed(oracle, state, segment, codec);
    const std::vector<BigInt> codes = decode_labels(packed, codec.radix(), segment.length());
    for (std::size_t k = 0; k < codes.size(); ++k) {
      result.labels[segment.start - 1 + k] = codec.value_at(codec.index_of_code(codes[k]));
    }
  }
  result.submissions_used = oracle.log().size() - before;
  return result;
}

}  // namespace scoreleak
