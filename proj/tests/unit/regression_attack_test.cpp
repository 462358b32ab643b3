#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>

#include "scoreleak/error.hpp"
#include "scoreleak/regression_attack.hpp"
#include "test_support.hpp"

namespace scoreleak {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::ParseError;
}

double gram_entry(const BasisMatrix& a, std::size_t i, std::size_t j) {
  return testing::direct_dot(a.columns[i], a.columns[j]);
}

TEST(BuildBasis, IndicatorPartition) {
  const BasisMatrix a = build_basis(IndicatorPartition{2}, 4);
  ASSERT_EQ(a.cols(), 2u);
  EXPECT_EQ(a.columns[0], (std::vector<double>{1, 1, 0, 0}));
  EXPECT_EQ(a.columns[1], (std::vector<double>{0, 0, 1, 1}));
}

TEST(BuildBasis, RandomOrthonormalIsOrthonormalAndSeeded) {
  const BasisMatrix a = build_basis(RandomOrthonormal{3, 99}, 8);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(gram_entry(a, i, j), i == j ? 1.0 : 0.0, 1e-12);
    }
  }
  EXPECT_EQ(build_basis(RandomOrthonormal{3, 99}, 8).columns, a.columns);
  EXPECT_NE(build_basis(RandomOrthonormal{3, 100}, 8).columns, a.columns);
}

TEST(BuildBasis, ErrorPaths) {
  EXPECT_EQ(code_of([] { build_basis(IndicatorPartition{5}, 4); }), ErrorCode::BadArity);
  EXPECT_EQ(code_of([] { build_basis(RandomOrthonormal{5, 1}, 4); }),
            ErrorCode::RankDeficientInput);
  EXPECT_EQ(code_of([] { build_basis(FromSubmissions{{{1, 2}}}, 3); }), ErrorCode::BadArity);
  EXPECT_EQ(code_of([] { build_basis(FromSubmissions{}, 3); }), ErrorCode::BadArity);
}

TEST(BuildBasis, DependentSubmissionsFailAtSolve) {
  const std::vector<double> v = {1, 2, 3};
  const BasisMatrix a = build_basis(FromSubmissions{{v, {2, 4, 6}}}, 3);
  const double aty[] = {1, 2};
  EXPECT_EQ(code_of([&] { solve_combination(a, aty, 1.0); }), ErrorCode::IllConditioned);
}

TEST(MeasureAty, Examples) {
  Oracle oracle({1, 0, 2, 1}, Bounds{0, 2}, OracleConfig{QuantizationMode::exact(), 10});
  auto state = KnowledgeState::for_oracle(oracle);
  EXPECT_EQ(code_of([&] { measure_aty(oracle, state, build_basis(IndicatorPartition{2}, 4)); }),
            ErrorCode::NormUnknown);
  probe_norm(oracle, state);

  const BasisMatrix zero{4, {{0, 0, 0, 0}}, "zero"};
  EXPECT_EQ(measure_aty(oracle, state, zero).values, (std::vector<double>{0}));
  EXPECT_EQ(oracle.log().size(), 1u);

  const auto aty = measure_aty(oracle, state, build_basis(IndicatorPartition{2}, 4));
  EXPECT_EQ(aty.values, (std::vector<double>{1, 3}));
  EXPECT_EQ(oracle.log().size(), 3u);
}

TEST(MeasureAty, FreshColumnsCostOneEachAndReuseIsFree) {
  std::mt19937_64 rng(51);
  const auto y = testing::uniform_vector(rng, 10, 0, 1);
  Oracle oracle(y, Bounds{0, 1}, OracleConfig{QuantizationMode::exact(), 20});
  auto state = KnowledgeState::for_oracle(oracle);
  probe_norm(oracle, state);
  const BasisMatrix a = build_basis(RandomOrthonormal{5, 7}, 10);
  measure_aty(oracle, state, a);
  EXPECT_EQ(oracle.log().size(), 6u);
  measure_aty(oracle, state, build_basis(FromSubmissions{a.columns}, 10));
  EXPECT_EQ(oracle.log().size(), 6u);
}

TEST(SolveCombination, IdentityBasisReturnsLabels) {
  const std::vector<double> y = {0.25, 1.5, -0.75};
  BasisMatrix identity{3, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, "identity"};
  const auto solution = solve_combination(identity, y, testing::direct_dot(y, y));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(solution.x[i], y[i], 1e-15);
    EXPECT_NEAR(solution.combined[i], y[i], 1e-15);
  }
  EXPECT_EQ(solution.predicted_rmse, 0.0);
  EXPECT_NEAR(solution.gram_condition_estimate, 1.0, 1e-12);
}

TEST(SolveCombination, IndicatorBasisGivesSegmentMeans) {
  // y = [1, 0, 2, 1]: segment sums 1 and 3, segment means 0.5 and 1.5, and
  // predicted rmse sqrt((1/4) * [(0.25*2 + 2.25*2) + 6 - 2*(0.5*1 + 1.5*3)]) = 0.5.
  const BasisMatrix a = build_basis(IndicatorPartition{2}, 4);
  const double aty[] = {1, 3};
  const auto solution = solve_combination(a, aty, 6.0);
  EXPECT_NEAR(solution.x[0], 0.5, 1e-15);
  EXPECT_NEAR(solution.x[1], 1.5, 1e-15);
  const double expected[] = {0.5, 0.5, 1.5, 1.5};
  ASSERT_EQ(solution.combined.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(solution.combined[i], expected[i], 1e-15);
  }
  EXPECT_NEAR(solution.predicted_rmse, 0.5, 1e-12);
}

TEST(SolveCombination, DuplicateColumnIsIllConditioned) {
  BasisMatrix a{3, {{1, 0, 1}, {1, 0, 1}}, "dup"};
  const double aty[] = {1, 1};
  EXPECT_EQ(code_of([&] { solve_combination(a, aty, 2.0); }), ErrorCode::IllConditioned);
  const double short_aty[] = {1};
  EXPECT_EQ(code_of([&] { solve_combination(a, short_aty, 2.0); }), ErrorCode::LengthMismatch);
}

TEST(PredictedRmse, Examples) {
  BasisMatrix identity{2, {{1, 0}, {0, 1}}, "identity"};
  const double y[] = {0.5, 2.0};
  EXPECT_EQ(predicted_rmse(identity, y, y, 4.25, 2), 0.0);

  const BasisMatrix a = build_basis(IndicatorPartition{2}, 4);
  const double x0[] = {0, 0};
  const double aty[] = {1, 3};
  EXPECT_DOUBLE_EQ(predicted_rmse(a, x0, aty, 6.0, 4), std::sqrt(6.0 / 4.0));
}

TEST(PredictedRmse, NegativeRadicand) {
  BasisMatrix identity{1, {{1}}, "identity"};
  const double x[] = {0};
  const double aty[] = {0};
  EXPECT_EQ(code_of([&] { predicted_rmse(identity, x, aty, -1.0, 1); }),
            ErrorCode::NegativeRadicand);
  EXPECT_EQ(predicted_rmse(identity, x, aty, -1e-10, 1), 0.0);
}

TEST(RegressionProperties, SpanOptimality) {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 31;
    const std::size_t r = 1 + rng() % std::min<std::size_t>(8, n);
    const auto y = testing::uniform_vector(rng, n, -1, 1);
    BasisMatrix a{n, {}, "random"};
    for (std::size_t j = 0; j < r; ++j) {
      a.columns.push_back(testing::uniform_vector(rng, n, -1, 1));
    }
    Oracle oracle(y, Bounds{-1, 1}, OracleConfig{QuantizationMode::exact(), r + 1, true});
    auto state = KnowledgeState::for_oracle(oracle);
    probe_norm(oracle, state);
    const auto aty = measure_aty(oracle, state, a);
    const auto solution = solve_combination(a, aty.values, to_double(state.y_sq()));
    const auto truth = oracle.reveal_labels_for_testing();
    const double best = std::sqrt(testing::squared_distance(solution.combined, truth));
    for (int other = 0; other < 10; ++other) {
      const auto x = testing::uniform_vector(rng, r, -2, 2);
      std::vector<double> combo(n, 0.0);
      for (std::size_t j = 0; j < r; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
          combo[i] += x[j] * a.columns[j][i];
        }
      }
      EXPECT_LE(best, std::sqrt(testing::squared_distance(combo, truth)) + 1e-9);
    }
  }
}

TEST(RegressionProperties, FullOrthonormalBasisRecoversLabels) {
  std::mt19937_64 rng(53);
  const std::size_t n = 24;
  const auto y = testing::uniform_vector(rng, n, 0, 1);
  Oracle oracle(y, Bounds{0, 1}, OracleConfig{QuantizationMode::exact(), n + 1});
  auto state = KnowledgeState::for_oracle(oracle);
  probe_norm(oracle, state);
  const BasisMatrix a = build_basis(RandomOrthonormal{n, 5}, n);
  const auto solution =
      solve_combination(a, measure_aty(oracle, state, a).values, to_double(state.y_sq()));
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_NEAR(solution.combined[i], y[i], 1e-8);
  }
}

TEST(RegressionProperties, QuantizedHalfwidthIsReported) {
  std::mt19937_64 rng(54);
  const auto y = testing::uniform_vector(rng, 16, 0, 1);
  Oracle oracle(y, Bounds{0, 1}, OracleConfig{QuantizationMode::quantized(4), 10});
  auto state = KnowledgeState::for_oracle(oracle);
  probe_norm(oracle, state);
  const BasisMatrix a = build_basis(IndicatorPartition{4}, 16);
  const auto aty = measure_aty(oracle, state, a);
  const auto solution = solve_combination(a, aty.values, to_double(state.y_sq()),
                                          to_double(state.y_sq_halfwidth()), aty.halfwidths);
  EXPECT_GT(solution.predicted_rmse_halfwidth, 0.0);
  EXPECT_LE(std::abs(solution.predicted_rmse - testing::kahan_rmse(solution.combined, y)),
            solution.predicted_rmse_halfwidth + 1e-9);
}

TEST(BasisCsv, WriteThenRead) {
  const auto path = std::filesystem::temp_directory_path() / "scoreleak_basis.csv";
  const BasisMatrix a = build_basis(RandomOrthonormal{3, 4}, 6);
  write_basis_csv(a, path);
  const BasisMatrix back = read_basis_csv(path);
  EXPECT_EQ(back.rows, 6u);
  EXPECT_EQ(back.columns, a.columns);
}

}  // namespace
}  // namespace scoreleak
