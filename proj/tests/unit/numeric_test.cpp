#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "scoreleak/error.hpp"
#include "scoreleak/numeric.hpp"

namespace scoreleak {
namespace {

TEST(FormatExact, IntegersDecimalsAndFractions) {
  EXPECT_EQ(format_exact(Rational(42)), "42");
  EXPECT_EQ(format_exact(Rational(-3, 4)), "-0.75");
  EXPECT_EQ(format_exact(Rational(1, 3)), "1/3");
  EXPECT_EQ(format_exact(to_rational(0.1)),
            "0.1000000000000000055511151231257827021181583404541015625");
  EXPECT_EQ(format_exact(Rational(pow_int(BigInt(2), 70))), "1180591620717411303424");
}

TEST(FormatExact, ParseRoundTripsRandomDoubles) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
  std::uniform_int_distribution<int> exponent(-60, 60);
  for (int trial = 0; trial < 2000; ++trial) {
    const double v = std::ldexp(mantissa(rng), exponent(rng));
    const Rational exact = to_rational(v);
    EXPECT_EQ(parse_exact(format_exact(exact)), exact);
    EXPECT_EQ(parse_double(format_shortest(v)), v);
  }
}

TEST(ParseExact, AcceptsExponentAndFraction) {
  EXPECT_EQ(parse_exact("1.5e-3"), Rational(3, 2000));
  EXPECT_EQ(parse_exact("+2E2"), Rational(200));
  EXPECT_EQ(parse_exact("-7/14"), Rational(-1, 2));
  EXPECT_THROW(parse_exact("abc"), Error);
  EXPECT_THROW(parse_exact("1.2.3"), Error);
  EXPECT_THROW(parse_exact(""), Error);
}

TEST(Rounding, HalfEven) {
  EXPECT_EQ(round_half_even(Rational(5, 2)), 2);
  EXPECT_EQ(round_half_even(Rational(7, 2)), 4);
  EXPECT_EQ(round_half_even(Rational(-5, 2)), -2);
  EXPECT_EQ(round_half_even(Rational(11, 10)), 1);
  EXPECT_EQ(floor_of(Rational(-1, 3)), -1);
}

TEST(SqrtToDouble, MatchesStdSqrtAndSurvivesHugeInputs) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(0.0, 1e6);
  for (int trial = 0; trial < 1000; ++trial) {
    const double v = dist(rng);
    EXPECT_EQ(sqrt_to_double(to_rational(v)), std::sqrt(v));
  }
  // 4^600 overflows a double, its root 2^600 does not.
  EXPECT_EQ(sqrt_to_double(Rational(pow_int(BigInt(4), 600))), std::ldexp(1.0, 600));
  EXPECT_THROW(sqrt_to_double(Rational(-1)), Error);
}

TEST(KahanSum, RecoversCancelledTerms) {
  const double terms[] = {1e16, 1.0, -1e16, 1.0};
  EXPECT_EQ(kahan_sum(terms), 2.0);
}

}  // namespace
}  // namespace scoreleak
