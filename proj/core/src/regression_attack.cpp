#include "scoreleak/regression_attack.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "scoreleak/error.hpp"
#include "scoreleak/mean_attack.hpp"

namespace scoreleak {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  KahanSum sum;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum.add(a[i] * b[i]);
  }
  return sum.value();
}

// Modified Gram-Schmidt, each column orthogonalized twice.
std::vector<std::vector<double>> orthonormal_columns(std::size_t n, std::size_t r,
                                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gaussian(0.0, 1.0);
  std::vector<std::vector<double>> columns;
  columns.reserve(r);
  while (columns.size() < r) {
    std::vector<double> v(n);
    for (double& e : v) {
      e = gaussian(rng);
    }
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : columns) {
        const double proj = dot(q, v);
        for (std::size_t i = 0; i < n; ++i) {
          v[i] -= proj * q[i];
        }
      }
    }
    const double norm = std::sqrt(dot(v, v));
    if (norm < 1e-8) {
      continue;  // numerically dependent draw; resample
    }
    for (double& e : v) {
      e /= norm;
    }
    columns.push_back(std::move(v));
  }
  return columns;
}

}  // namespace

BasisMatrix build_basis(const BasisKind& kind, std::size_t n) {
  if (n == 0) {
    throw Error(ErrorCode::BadArity, "basis needs at least one row");
  }
  return std::visit(
      [n](const auto& k) -> BasisMatrix {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, IndicatorPartition>) {
          BasisMatrix basis{n, {}, "indicator-partition"};
          for (const Segment& seg : plan_partition(n, k.segments)) {
            basis.columns.push_back(indicator(seg, n));
          }
          return basis;
        } else if constexpr (std::is_same_v<K, RandomOrthonormal>) {
          if (k.columns < 1) {
            throw Error(ErrorCode::BadArity, "random-orthonormal needs r >= 1");
          }
          if (k.columns > n) {
            throw Error(ErrorCode::RankDeficientInput,
                        "cannot draw " + std::to_string(k.columns) +
                            " orthonormal columns in dimension " + std::to_string(n));
          }
          return BasisMatrix{n, orthonormal_columns(n, k.columns, k.seed), "random-orthonormal"};
        } else {
          if (k.columns.empty()) {
            throw Error(ErrorCode::BadArity, "from-submissions needs at least one column");
          }
          if (k.columns.size() > n) {
            throw Error(ErrorCode::RankDeficientInput,
                        std::to_string(k.columns.size()) + " columns in dimension " +
                            std::to_string(n) + " are linearly dependent");
          }
          for (const auto& column : k.columns) {
            if (column.size() != n) {
              throw Error(ErrorCode::BadArity, "submission column length " +
                                                   std::to_string(column.size()) + " != " +
                                                   std::to_string(n));
            }
          }
          return BasisMatrix{n, k.columns, "from-submissions"};
        }
      },
      kind);
}

AtyMeasurement measure_aty(Oracle& oracle, KnowledgeState& state, const BasisMatrix& basis) {
  if (!state.has_norm()) {
    throw Error(ErrorCode::NormUnknown, "probe the label norm first");
  }
  AtyMeasurement out;
  out.values.reserve(basis.cols());
  out.halfwidths.reserve(basis.cols());
  for (std::size_t j = 0; j < basis.cols(); ++j) {
    const InnerProductRecord record =
        inner_product(oracle, state, Submission::from_doubles(basis.columns[j]),
                      basis.kind + ":column-" + std::to_string(j + 1));
    out.values.push_back(record.approx());
    out.halfwidths.push_back(record.halfwidth_approx());
    out.exact.push_back(record.value);
  }
  return out;
}

namespace {

// A x held exactly, and its correctly rounded double form that is submitted.
struct Combination {
  std::vector<Rational> exact;
  std::vector<double> rounded;
};

Combination combine(const BasisMatrix& basis, std::span<const double> x) {
  std::vector<Rational> xs(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    xs[j] = to_rational(x[j]);
  }
  Combination out{std::vector<Rational>(basis.rows), std::vector<double>(basis.rows)};
  for (std::size_t i = 0; i < basis.rows; ++i) {
    Rational& entry = out.exact[i];
    for (std::size_t j = 0; j < basis.cols(); ++j) {
      if (basis.columns[j][i] != 0.0) {
        entry += xs[j] * to_rational(basis.columns[j][i]);
      }
    }
    out.rounded[i] = to_double(entry);
  }
  return out;
}

// Squared error of the rounded vector c = Ax + d, taken as
// ||Ax||^2 + y_sq - 2 x^T aty + ||d||^2. The dropped cross term 2<d, Ax - y>
// is below ||d|| times the residual norm. Evaluated exactly since the terms
// cancel heavily near a good fit.
double rmse_from_terms(const Combination& c, std::span<const double> x,
                       std::span<const Rational> aty, const Rational& y_sq, std::size_t n) {
  Rational radicand = y_sq;
  for (std::size_t i = 0; i < c.exact.size(); ++i) {
    const Rational d = to_rational(c.rounded[i]) - c.exact[i];
    radicand += c.exact[i] * c.exact[i] + d * d;
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    radicand -= 2 * to_rational(x[j]) * aty[j];
  }
  radicand /= n;
  if (radicand < Rational(-1, 1000000)) {
    throw Error(ErrorCode::NegativeRadicand,
                "predicted mean squared error " + format_shortest(to_double(radicand)) +
                    " is negative");
  }
  return radicand <= 0 ? 0.0 : sqrt_to_double(radicand);
}

std::vector<Rational> exact_values(std::span<const double> values) {
  std::vector<Rational> out(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    out[j] = to_rational(values[j]);
  }
  return out;
}

// Cholesky solve after the condition check; fills x and the condition
// estimate.
RegressionSolution solve_normal_equations(const BasisMatrix& basis, std::span<const double> aty) {
  const std::size_t r = basis.cols();
  if (aty.size() != r) {
    throw Error(ErrorCode::LengthMismatch, "A^T y has " + std::to_string(aty.size()) +
                                               " entries for " + std::to_string(r) + " columns");
  }

  Eigen::MatrixXd a(basis.rows, r);
  for (std::size_t j = 0; j < r; ++j) {
    a.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Eigen::VectorXd>(basis.columns[j].data(),
                                          static_cast<Eigen::Index>(basis.rows));
  }
  const Eigen::MatrixXd gram = a.transpose() * a;

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lambda_min = eig.eigenvalues().minCoeff();
  const double lambda_max = eig.eigenvalues().maxCoeff();
  const double condition = lambda_min > 0.0 ? lambda_max / lambda_min
                                            : std::numeric_limits<double>::infinity();
  if (!(condition <= kMaxGramCondition)) {
    throw Error(ErrorCode::IllConditioned,
                "Gram matrix condition estimate " + format_shortest(condition) + " exceeds 1e12");
  }

  const Eigen::LLT<Eigen::MatrixXd> cholesky(gram);
  if (cholesky.info() != Eigen::Success) {
    throw Error(ErrorCode::IllConditioned, "Gram matrix is not positive definite");
  }
  const Eigen::VectorXd rhs =
      Eigen::Map<const Eigen::VectorXd>(aty.data(), static_cast<Eigen::Index>(r));
  const Eigen::VectorXd x = cholesky.solve(rhs);

  RegressionSolution solution;
  solution.x.assign(x.data(), x.data() + x.size());
  solution.gram_condition_estimate = condition;
  return solution;
}

// At the optimum the radicand equals y_sq - aty^T G^-1 aty, whose gradient
// is 1 in y_sq and -2x in aty.
void set_halfwidth(RegressionSolution& solution, double y_sq_halfwidth,
                   std::span<const double> aty_halfwidths) {
  double radicand_halfwidth = y_sq_halfwidth;
  for (std::size_t j = 0; j < aty_halfwidths.size() && j < solution.x.size(); ++j) {
    radicand_halfwidth += 2.0 * std::abs(solution.x[j]) * aty_halfwidths[j];
  }
  const double n = static_cast<double>(solution.combined.size());
  if (radicand_halfwidth > 0.0) {
    solution.predicted_rmse_halfwidth =
        solution.predicted_rmse > 0.0
            ? radicand_halfwidth / (2.0 * n * solution.predicted_rmse)
            : std::sqrt(radicand_halfwidth / n);
  }
}

}  // namespace

double predicted_rmse(const BasisMatrix& basis, std::span<const double> x,
                      std::span<const double> aty, double y_sq, std::size_t n) {
  return predicted_rmse(basis, x, exact_values(aty), to_rational(y_sq), n);
}

double predicted_rmse(const BasisMatrix& basis, std::span<const double> x,
                      std::span<const Rational> aty, const Rational& y_sq, std::size_t n) {
  if (x.size() != basis.cols() || aty.size() != basis.cols()) {
    throw Error(ErrorCode::LengthMismatch, "coefficient count does not match basis columns");
  }
  return rmse_from_terms(combine(basis, x), x, aty, y_sq, n);
}

RegressionSolution solve_combination(const BasisMatrix& basis, std::span<const double> aty,
                                     double y_sq, double y_sq_halfwidth,
                                     std::span<const double> aty_halfwidths) {
  RegressionSolution solution = solve_normal_equations(basis, aty);
  Combination c = combine(basis, solution.x);
  solution.predicted_rmse =
      rmse_from_terms(c, solution.x, exact_values(aty), to_rational(y_sq), basis.rows);
  solution.combined = std::move(c.rounded);
  set_halfwidth(solution, y_sq_halfwidth, aty_halfwidths);
  return solution;
}

RegressionSolution solve_combination(const BasisMatrix& basis, const AtyMeasurement& aty,
                                     const Rational& y_sq, const Rational& y_sq_halfwidth) {
  if (aty.exact.size() != aty.values.size()) {
    throw Error(ErrorCode::LengthMismatch, "A^T y measurement has no exact values");
  }
  RegressionSolution solution = solve_normal_equations(basis, aty.values);
  Combination c = combine(basis, solution.x);
  solution.predicted_rmse = rmse_from_terms(c, solution.x, aty.exact, y_sq, basis.rows);
  solution.combined = std::move(c.rounded);
  set_halfwidth(solution, to_double(y_sq_halfwidth), aty.halfwidths);
  return solution;
}

void write_basis_csv(const BasisMatrix& basis, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  }
  out << "row";
  for (std::size_t j = 0; j < basis.cols(); ++j) {
    out << ",a" << (j + 1);
  }
  out << '\n';
  for (std::size_t i = 0; i < basis.rows; ++i) {
    out << (i + 1);
    for (const auto& column : basis.columns) {
      out << ',' << format_shortest(column[i]);
    }
    out << '\n';
  }
  if (!out) {
    throw Error(ErrorCode::IoFailure, "write to '" + path.string() + "' failed");
  }
}

BasisMatrix read_basis_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line) || line.rfind("row", 0) != 0) {
    throw Error(ErrorCode::ParseError, "basis CSV must start with a 'row,...' header");
  }
  const auto cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  BasisMatrix basis{0, std::vector<std::vector<double>>(cols), "csv"};
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::stringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    if (std::stoul(cell) != basis.rows + 1) {
      throw Error(ErrorCode::ParseError, "basis rows must be numbered 1..n in order");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!std::getline(row, cell, ',')) {
        throw Error(ErrorCode::ParseError, "short basis row " + std::to_string(basis.rows + 1));
      }
      basis.columns[j].push_back(parse_double(cell));
    }
    ++basis.rows;
  }
  return basis;
}

}  // namespace scoreleak
