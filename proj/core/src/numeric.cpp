#include "scoreleak/numeric.hpp"

#include <mpfr.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <system_error>

#include "scoreleak/error.hpp"

namespace scoreleak {

namespace {

class MpfrValue {
 public:
  explicit MpfrValue(mpfr_prec_t precision) { mpfr_init2(value_, precision); }
  ~MpfrValue() { mpfr_clear(value_); }
  MpfrValue(const MpfrValue&) = delete;
  MpfrValue& operator=(const MpfrValue&) = delete;

  mpfr_ptr get() { return value_; }

 private:
  mpfr_t value_;
};

std::size_t bit_length(const BigInt& value) {
  if (value == 0) {
    return 0;
  }
  return boost::multiprecision::msb(boost::multiprecision::abs(value)) + 1;
}

}  // namespace

Rational to_rational(double value) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::NonFiniteEntry, "value is not finite");
  }
  return Rational(value);
}

double to_double(const Rational& value) {
  MpfrValue out(53);
  mpfr_set_q(out.get(), value.backend().data(), MPFR_RNDN);
  return mpfr_get_d(out.get(), MPFR_RNDN);
}

double sqrt_to_double(const Rational& value) {
  if (value < 0) {
    throw Error(ErrorCode::NegativeRadicand, "square root of a negative rational");
  }
  // Enough working bits that rounding the input cannot move the 53-bit result.
  const BigInt num = boost::multiprecision::numerator(value);
  const BigInt den = boost::multiprecision::denominator(value);
  const auto bits = static_cast<mpfr_prec_t>(bit_length(num) + bit_length(den) + 128);
  MpfrValue wide(bits);
  mpfr_set_q(wide.get(), value.backend().data(), MPFR_RNDN);
  MpfrValue root(53);
  mpfr_sqrt(root.get(), wide.get(), MPFR_RNDN);
  return mpfr_get_d(root.get(), MPFR_RNDN);
}

BigInt floor_of(const Rational& value) {
  BigInt result;
  mpz_fdiv_q(result.backend().data(), mpq_numref(value.backend().data()),
             mpq_denref(value.backend().data()));
  return result;
}

BigInt round_half_even(const Rational& value) {
  BigInt lower = floor_of(value);
  const Rational fraction = value - Rational(lower);
  const Rational half(1, 2);
  if (fraction > half) {
    return lower + 1;
  }
  if (fraction < half) {
    return lower;
  }
  return (lower % 2 == 0) ? lower : lower + 1;
}

BigInt pow10(unsigned exponent) {
  BigInt result;
  mpz_ui_pow_ui(result.backend().data(), 10, exponent);
  return result;
}

BigInt pow_int(const BigInt& base, std::size_t exponent) {
  return boost::multiprecision::pow(base, static_cast<unsigned>(exponent));
}

std::string format_exact(const Rational& value) {
  const BigInt num = boost::multiprecision::numerator(value);
  BigInt den = boost::multiprecision::denominator(value);
  if (den == 1) {
    return num.str();
  }

  unsigned twos = 0;
  unsigned fives = 0;
  while (den % 2 == 0) {
    den /= 2;
    ++twos;
  }
  while (den % 5 == 0) {
    den /= 5;
    ++fives;
  }
  if (den != 1) {
    return num.str() + "/" + boost::multiprecision::denominator(value).str();
  }

  const unsigned places = std::max(twos, fives);
  const BigInt scaled = boost::multiprecision::abs(
      num * pow10(places) / boost::multiprecision::denominator(value));
  std::string digits = scaled.str();
  if (digits.size() <= places) {
    digits.insert(0, places - digits.size() + 1, '0');
  }
  digits.insert(digits.size() - places, 1, '.');
  return (num < 0 ? "-" : "") + digits;
}

Rational parse_exact(std::string_view text) {
  const auto fail = [&]() {
    return Error(ErrorCode::ParseError, "not an exact decimal: '" + std::string(text) + "'");
  };
  if (text.empty()) {
    throw fail();
  }

  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const Rational num = parse_exact(text.substr(0, slash));
    const Rational den = parse_exact(text.substr(slash + 1));
    if (den == 0 || boost::multiprecision::denominator(num) != 1 ||
        boost::multiprecision::denominator(den) != 1) {
      throw fail();
    }
    return num / den;
  }

  std::size_t pos = 0;
  bool negative = false;
  if (text[pos] == '+' || text[pos] == '-') {
    negative = text[pos] == '-';
    ++pos;
  }

  std::string digits;
  long fraction_places = 0;
  bool seen_point = false;
  for (; pos < text.size(); ++pos) {
    const char ch = text[pos];
    if (ch >= '0' && ch <= '9') {
      digits.push_back(ch);
      if (seen_point) {
        ++fraction_places;
      }
    } else if (ch == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (digits.empty()) {
    throw fail();
  }

  long exponent = 0;
  if (pos < text.size()) {
    if (text[pos] != 'e' && text[pos] != 'E') {
      throw fail();
    }
    ++pos;
    const std::string_view rest = text.substr(pos);
    const char* first = rest.data();
    if (!rest.empty() && rest.front() == '+') {
      ++first;
    }
    const auto [end, ec] = std::from_chars(first, rest.data() + rest.size(), exponent);
    if (ec != std::errc{} || end != rest.data() + rest.size() || first == end) {
      throw fail();
    }
  }

  // A leading zero would make the string parse as octal.
  const auto first = digits.find_first_not_of('0');
  Rational result{BigInt(first == std::string::npos ? std::string("0") : digits.substr(first))};
  const long shift = exponent - fraction_places;
  if (shift >= 0) {
    result *= Rational(pow10(static_cast<unsigned>(shift)));
  } else {
    result /= Rational(pow10(static_cast<unsigned>(-shift)));
  }
  return negative ? Rational(-result) : result;
}

std::string format_shortest(double value) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) {
    throw Error(ErrorCode::ParseError, "cannot render double");
  }
  return std::string(buffer, end);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') {
    ++first;
  }
  const auto [end, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || end != last || first == last) {
    throw Error(ErrorCode::ParseError, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

void KahanSum::add(double term) noexcept {
  const double total = sum_ + term;
  if (std::abs(sum_) >= std::abs(term)) {
    compensation_ += (sum_ - total) + term;
  } else {
    compensation_ += (term - total) + sum_;
  }
  sum_ = total;
}

double kahan_sum(std::span<const double> terms) noexcept {
  KahanSum sum;
  for (const double term : terms) {
    sum.add(term);
  }
  return sum.value();
}

double kahan_squared_norm(std::span<const double> entries) noexcept {
  KahanSum sum;
  for (const double entry : entries) {
    sum.add(entry * entry);
  }
  return sum.value();
}

}  // namespace scoreleak
