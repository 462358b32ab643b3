#pragma once

// Attack campaigns against a simulated leaderboard: instance generation,
// scenario execution with a shared knowledge state, and report verification.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scoreleak/oracle.hpp"

namespace scoreleak {

struct InstanceSpec {
  std::size_t n = 0;
  std::optional<Bounds> bounds;
  std::optional<std::vector<double>> alphabet;  // absent: continuous labels
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> ground_truth;  // load labels instead of generating

  /// Accepts {n, bounds, alphabet, seed}, {ground_truth, bounds, alphabet} or
  /// {file: <instance.json>}; relative paths resolve against base_dir.
  static InstanceSpec from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
};

struct Instance {
  std::vector<double> labels;
  Bounds bounds;
  std::optional<std::vector<double>> alphabet;
  std::uint64_t seed = 0;
};

/// Seeded and reproducible. Throws BadSpec.
Instance gen_instance(const InstanceSpec& spec);

/// Writes ground_truth.csv and instance.json into `dir`.
void write_instance(const Instance& instance, const std::filesystem::path& dir);
Instance read_instance(const std::filesystem::path& metadata_json);

struct CampaignStep {
  std::string name;        // norm-probe, mean-sweep, regression, finite-label, score, submit-final
  std::size_t k = 0;       // mean-sweep and indicator-partition segment count
  std::string basis;       // regression: indicator-partition, random-orthonormal, from-candidates
  std::size_t r = 0;       // random-orthonormal column count
  std::uint64_t seed = 0;  // random-orthonormal seed
  bool score = false;      // spend one submission to observe the step's candidate
};

struct ScenarioConfig {
  InstanceSpec instance;
  OracleConfig oracle;
  std::vector<CampaignStep> campaign;

  /// Throws BadSpec.
  static ScenarioConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
  static ScenarioConfig load(const std::filesystem::path& path);
};

struct StepRecord {
  std::string name;
  std::string status = "ok";  // "ok" or an error code name
  std::string detail;
  std::size_t submissions = 0;
  std::optional<double> best_rmse;
  std::optional<double> predicted_rmse;
  std::optional<double> predicted_halfwidth;
  std::optional<double> observed_rmse;
  std::optional<std::string> candidate_file;  // relative to the output directory
};

struct CampaignReport {
  std::size_t n = 0;
  std::string mode;
  std::size_t budget = 0;
  std::vector<StepRecord> steps;
  std::size_t total_submissions = 0;
  std::optional<double> final_rmse;
  bool exact_recovery = false;

  bool any_step_failed() const;

  nlohmann::ordered_json to_json() const;
  static CampaignReport from_json(const nlohmann::json& doc);
};

/// Runs every step in order against one oracle and writes into out_dir:
/// report.json, run_info.json, trajectory.csv, submissions.jsonl,
/// ground_truth.csv, instance.json, candidates/step_<i>.csv and, after a
/// submit-final step, final_submission.csv. Step errors are recorded and do
/// not stop later steps.
CampaignReport run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir);

struct Finding {
  std::string check;
  bool passed = false;
  std::string detail;
};

/// Re-checks a report against the ground truth: best-rmse monotonicity,
/// submission totals, predicted and observed scores of each saved candidate,
/// and the exact-recovery claim. `out_dir` holds the candidate files.
std::vector<Finding> verify_report(const CampaignReport& report, const Instance& instance,
                                   const std::filesystem::path& out_dir);

/// Exact RMSE of a submission against labels, as the oracle would compute it
/// in exact mode, without consuming any budget.
double rescore(const Submission& submission, std::span<const double> labels);

}  // namespace scoreleak
