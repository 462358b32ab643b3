#pragma once

// Least-squares combination of probe columns.
//
// With A^T y learned column by column through inner products, the best
// submission inside span(A) is A x with x solving (A^T A) x = A^T y, and its
// RMSE follows without scoring it:
//   sqrt((x^T A^T A x + ||y||^2 - 2 x^T A^T y) / n).

#include <cstdint>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "scoreleak/oracle.hpp"
#include "scoreleak/probe.hpp"

namespace scoreleak {

struct BasisMatrix {
  std::size_t rows = 0;
  std::vector<std::vector<double>> columns;
  std::string kind;

  std::size_t cols() const noexcept { return columns.size(); }
};

struct IndicatorPartition {
  std::size_t segments = 1;
};

struct RandomOrthonormal {
  std::size_t columns = 1;
  std::uint64_t seed = 0;
};

struct FromSubmissions {
  std::vector<std::vector<double>> columns;
};

using BasisKind = std::variant<IndicatorPartition, RandomOrthonormal, FromSubmissions>;

/// Throws BadArity for inconsistent sizes, RankDeficientInput when more
/// columns than rows are requested. Dependent submission columns are only
/// detected by solve_combination.
BasisMatrix build_basis(const BasisKind& kind, std::size_t n);

struct AtyMeasurement {
  std::vector<double> values;
  std::vector<double> halfwidths;
  std::vector<Rational> exact;  // the recovered inner products before rounding
};

/// One inner product per column; columns already in the cache are free.
/// Throws NormUnknown, BudgetExhausted or LengthMismatch.
AtyMeasurement measure_aty(Oracle& oracle, KnowledgeState& state, const BasisMatrix& basis);

struct RegressionSolution {
  std::vector<double> x;
  std::vector<double> combined;  // A x
  double predicted_rmse = 0.0;
  /// Linear propagation of the A^T y and ||y||^2 half-widths; 0 in exact mode.
  double predicted_rmse_halfwidth = 0.0;
  double gram_condition_estimate = 0.0;
};

inline constexpr double kMaxGramCondition = 1e12;

/// Solves the normal equations by Cholesky after an eigenvalue condition
/// check. Throws IllConditioned when cond(A^T A) > 1e12, LengthMismatch when
/// aty has the wrong length.
RegressionSolution solve_combination(const BasisMatrix& basis, std::span<const double> aty,
                                     double y_sq, double y_sq_halfwidth = 0.0,
                                     std::span<const double> aty_halfwidths = {});

/// Same, but the predicted RMSE is evaluated from the unrounded inner
/// products and norm held in the knowledge state.
RegressionSolution solve_combination(const BasisMatrix& basis, const AtyMeasurement& aty,
                                     const Rational& y_sq, const Rational& y_sq_halfwidth);

/// sqrt((x^T A^T A x + y_sq - 2 x^T aty) / n), clamped to 0 for radicands in
/// [-1e-6, 0). Throws NegativeRadicand below -1e-6.
double predicted_rmse(const BasisMatrix& basis, std::span<const double> x,
                      std::span<const double> aty, double y_sq, std::size_t n);
double predicted_rmse(const BasisMatrix& basis, std::span<const double> x,
                      std::span<const Rational> aty, const Rational& y_sq, std::size_t n);

/// Rows 1..n with header row,a1..ar; values in shortest round-trip form.
void write_basis_csv(const BasisMatrix& basis, const std::filesystem::path& path);
BasisMatrix read_basis_csv(const std::filesystem::path& path);

}  // namespace scoreleak
