#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "scoreleak/error.hpp"
#include "scoreleak/scenario.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace scoreleak {
namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("scoreleak_scenario_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

bool all_passed(const std::vector<Finding>& findings) {
  for (const Finding& f : findings) {
    if (!f.passed) {
      ADD_FAILURE() << f.check << ": " << f.detail;
      return false;
    }
  }
  return true;
}

ScenarioConfig config_of(const std::string& text) {
  return ScenarioConfig::from_json(json::parse(text), fs::current_path());
}

TEST(GenInstance, Deterministic) {
  InstanceSpec spec;
  spec.n = 50;
  spec.alphabet = std::vector<double>{0, 1, 2};
  spec.seed = 11;
  const Instance a = gen_instance(spec);
  const Instance b = gen_instance(spec);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.bounds.lo, 0.0);
  EXPECT_EQ(a.bounds.hi, 2.0);
  for (double v : a.labels) {
    EXPECT_TRUE(v == 0.0 || v == 1.0 || v == 2.0);
  }
  spec.seed = 12;
  EXPECT_NE(gen_instance(spec).labels, a.labels);
}

TEST(GenInstance, ContinuousLabelsStayInBounds) {
  InstanceSpec spec;
  spec.n = 500;
  spec.bounds = Bounds::make(-2.5, 4.0);
  spec.seed = 3;
  const Instance instance = gen_instance(spec);
  ASSERT_EQ(instance.labels.size(), 500u);
  for (double v : instance.labels) {
    EXPECT_GE(v, -2.5);
    EXPECT_LE(v, 4.0);
  }
}

TEST(GenInstance, RejectsBadSpecs) {
  InstanceSpec dup;
  dup.n = 5;
  dup.alphabet = std::vector<double>{0, 1, 0};
  try {
    gen_instance(dup);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadSpec);
  }
  InstanceSpec empty;
  empty.bounds = Bounds::make(0, 1);
  EXPECT_THROW(gen_instance(empty), Error);
}

TEST(GenInstance, WriteReadRoundTrip) {
  const fs::path dir = scratch("roundtrip");
  InstanceSpec spec;
  spec.n = 40;
  spec.bounds = Bounds::make(0, 1);
  spec.seed = 9;
  const Instance instance = gen_instance(spec);
  write_instance(instance, dir);
  const Instance back = read_instance(dir / "instance.json");
  EXPECT_EQ(back.labels, instance.labels);
  EXPECT_EQ(back.bounds.lo, 0.0);
  EXPECT_EQ(back.bounds.hi, 1.0);
  EXPECT_EQ(back.seed, 9u);
}

TEST(ScenarioConfig, Validation) {
  const auto code = [](const std::string& text) {
    try {
      config_of(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ParseError;
  };
  EXPECT_EQ(code(R"({"instance":{"n":5,"bounds":[0,1]},"oracle":{"budget":3},
                     "campaign":[{"step":"dance"}]})"),
            ErrorCode::BadSpec);
  EXPECT_EQ(code(R"({"instance":{"n":5,"bounds":[0,1]},"oracle":{"budget":3},
                     "campaign":[{"step":"mean-sweep","k":2}]})"),
            ErrorCode::BadSpec);
  EXPECT_EQ(code(R"({"instance":{"n":5,"bounds":[0,1]},"oracle":{"budget":3},
                     "campaign":[{"step":"norm-probe"},{"step":"regression","basis":"magic"}]})"),
            ErrorCode::BadSpec);
  const ScenarioConfig ok = config_of(
      R"({"instance":{"n":5,"bounds":[0,1]},"oracle":{"mode":"quantized:4","budget":3},
          "campaign":[{"step":"norm-probe"},{"step":"mean-sweep","k":2}]})");
  EXPECT_EQ(ok.oracle.mode, QuantizationMode::quantized(4));
  EXPECT_TRUE(ok.campaign[1].score);
  EXPECT_FALSE(ok.campaign[0].score);
}

TEST(RunScenario, CaseStudyBinaryLabels) {
  const fs::path dir = scratch("case_study");
  const ScenarioConfig config = config_of(
      R"({"instance":{"n":1000,"alphabet":[0,1],"seed":7},
          "oracle":{"mode":"exact","budget":5},
          "campaign":[{"step":"norm-probe"},{"step":"finite-label"},{"step":"submit-final"}]})");
  const CampaignReport report = run_scenario(config, dir);
  EXPECT_FALSE(report.any_step_failed());
  ASSERT_EQ(report.steps.size(), 3u);
  EXPECT_EQ(report.steps[0].submissions, 1u);
  EXPECT_EQ(report.steps[1].submissions, 1u);
  EXPECT_EQ(report.total_submissions, 3u);
  ASSERT_TRUE(report.final_rmse);
  EXPECT_EQ(*report.final_rmse, 0.0);
  EXPECT_TRUE(report.exact_recovery);

  const Instance instance = read_instance(dir / "instance.json");
  EXPECT_TRUE(all_passed(verify_report(report, instance, dir)));
  for (const char* name : {"report.json", "run_info.json", "trajectory.csv", "submissions.jsonl",
                           "ground_truth.csv", "final_submission.csv"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
}

TEST(RunScenario, MeanSweepBestRmseNonincreasing) {
  const std::size_t n = 24;
  json doc = json::parse(R"({"instance":{"n":24,"bounds":[0,5],"seed":21},
                             "oracle":{"mode":"exact","budget":1000},"campaign":[{"step":"norm-probe"}]})");
  for (std::size_t k = 1; k <= n; ++k) {
    doc["campaign"].push_back({{"step", "mean-sweep"}, {"k", k}});
  }
  const fs::path dir = scratch("sweep");
  const CampaignReport report = run_scenario(ScenarioConfig::from_json(doc, dir), dir);
  EXPECT_FALSE(report.any_step_failed());
  std::optional<double> previous;
  for (const StepRecord& step : report.steps) {
    ASSERT_TRUE(step.best_rmse);
    if (previous) {
      EXPECT_LE(*step.best_rmse, *previous + 1e-12);
    }
    previous = step.best_rmse;
  }
  // Singleton segments pin every label.
  EXPECT_NEAR(*report.steps.back().observed_rmse, 0.0, 1e-12);
  EXPECT_TRUE(all_passed(verify_report(report, read_instance(dir / "instance.json"), dir)));
}

TEST(RunScenario, BudgetExhaustionIsRecordedAndLaterStepsRun) {
  const fs::path dir = scratch("budget");
  const ScenarioConfig config = config_of(
      R"({"instance":{"n":30,"bounds":[0,1],"seed":5},"oracle":{"mode":"exact","budget":3},
          "campaign":[{"step":"norm-probe"},{"step":"mean-sweep","k":10},{"step":"score"}]})");
  const CampaignReport report = run_scenario(config, dir);
  ASSERT_EQ(report.steps.size(), 3u);
  EXPECT_EQ(report.steps[0].status, "ok");
  EXPECT_EQ(report.steps[1].status, "BudgetExhausted");
  EXPECT_EQ(report.steps[1].submissions, 2u);
  EXPECT_EQ(report.steps[2].status, "BudgetExhausted");
  EXPECT_EQ(report.total_submissions, 3u);
  EXPECT_TRUE(report.any_step_failed());
}

TEST(RunScenario, RegressionPredictionMatchesTruth) {
  const fs::path dir = scratch("regression");
  const ScenarioConfig config = config_of(
      R"({"instance":{"n":200,"bounds":[-1,3],"seed":17},"oracle":{"mode":"exact","budget":50},
          "campaign":[{"step":"norm-probe"},
                      {"step":"regression","basis":"random-orthonormal","r":10,"seed":4,"score":true},
                      {"step":"mean-sweep","k":5},
                      {"step":"regression","basis":"indicator-partition","k":8,"score":true},
                      {"step":"regression","basis":"from-candidates"}]})");
  const CampaignReport report = run_scenario(config, dir);
  EXPECT_FALSE(report.any_step_failed());
  for (const StepRecord& step : report.steps) {
    if (step.name == "regression" && step.observed_rmse) {
      EXPECT_NEAR(*step.predicted_rmse, *step.observed_rmse, 1e-9);
    }
  }
  EXPECT_TRUE(all_passed(verify_report(report, read_instance(dir / "instance.json"), dir)));
}

TEST(VerifyReport, TamperedReportIsFlagged) {
  const fs::path dir = scratch("tamper");
  const ScenarioConfig config = config_of(
      R"({"instance":{"n":60,"alphabet":[0,1,2],"seed":8},"oracle":{"mode":"exact","budget":5},
          "campaign":[{"step":"norm-probe"},{"step":"mean-sweep","k":3},{"step":"submit-final"}]})");
  CampaignReport report = run_scenario(config, dir);
  const Instance instance = read_instance(dir / "instance.json");
  EXPECT_TRUE(all_passed(verify_report(report, instance, dir)));

  CampaignReport tampered = CampaignReport::from_json(json::parse(slurp(dir / "report.json")));
  *tampered.steps[1].observed_rmse *= 0.5;
  tampered.exact_recovery = true;
  std::size_t failures = 0;
  for (const Finding& f : verify_report(tampered, instance, dir)) {
    failures += f.passed ? 0 : 1;
  }
  EXPECT_GE(failures, 2u);
}

TEST(RunScenario, ReportIsByteIdenticalAcrossRuns) {
  const std::string text =
      R"({"instance":{"n":80,"alphabet":[0,1,2,3],"seed":2},"oracle":{"mode":"quantized:6","budget":40},
          "campaign":[{"step":"norm-probe"},{"step":"mean-sweep","k":4},
                      {"step":"regression","basis":"random-orthonormal","r":6,"seed":1,"score":true},
                      {"step":"finite-label"},{"step":"submit-final"}]})";
  const fs::path a = scratch("repeat_a");
  const fs::path b = scratch("repeat_b");
  run_scenario(config_of(text), a);
  run_scenario(config_of(text), b);
  EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
  EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
  EXPECT_EQ(slurp(a / "final_submission.csv"), slurp(b / "final_submission.csv"));
}

TEST(Rescore, MatchesDirectComputation) {
  const std::vector<double> labels = {0.5, 1.5, -2.0};
  const std::vector<double> ones = {1.0, 1.0, 1.0};
  EXPECT_NEAR(rescore(Submission::from_doubles(ones), labels), testing::kahan_rmse(ones, labels),
              1e-15);
}

}  // namespace
}  // namespace scoreleak
