#pragma once

// Exact arithmetic helpers shared by the oracle and the attacks.
//
// Scores, squared norms and inner products are carried as GMP rationals so
// that submissions with entries as large as c^(n-1) (the finite-label probe)
// are scored without overflow or cancellation. Doubles convert to rationals
// exactly; the reverse direction rounds to nearest.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include <boost/multiprecision/gmp.hpp>

namespace scoreleak {

using BigInt = boost::multiprecision::mpz_int;
using Rational = boost::multiprecision::mpq_rational;

/// Exact conversion; throws NonFiniteEntry for NaN or infinity.
Rational to_rational(double value);

/// Nearest double (round-half-even), +-inf on overflow.
double to_double(const Rational& value);

/// Nearest double to sqrt(value). Requires value >= 0.
double sqrt_to_double(const Rational& value);

BigInt floor_of(const Rational& value);

/// Nearest integer, ties to even.
BigInt round_half_even(const Rational& value);

/// 10^exponent for exponent >= 0.
BigInt pow10(unsigned exponent);

BigInt pow_int(const BigInt& base, std::size_t exponent);

/// Canonical text of a rational: an integer, a terminating decimal written out
/// in full, or "p/q" when the expansion does not terminate.
std::string format_exact(const Rational& value);

/// Inverse of format_exact; also accepts an exponent suffix ("1.5e-3").
Rational parse_exact(std::string_view text);

/// Shortest decimal that parses back to the same double.
std::string format_shortest(double value);

double parse_double(std::string_view text);

/// Neumaier-compensated running sum.
class KahanSum {
 public:
  void add(double term) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

double kahan_sum(std::span<const double> terms) noexcept;

/// Compensated sum of squares of the entries.
double kahan_squared_norm(std::span<const double> entries) noexcept;

}  // namespace scoreleak
