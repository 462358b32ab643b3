// scoreleak: generate leaderboard instances, run attack campaigns against a
// simulated RMSE oracle, verify reports, and re-score submission files.
//
// Exit codes: 0 success, 2 step or verification failure, 3 config error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scoreleak/error.hpp"
#include "scoreleak/io.hpp"
#include "scoreleak/oracle.hpp"
#include "scoreleak/scenario.hpp"

namespace fs = std::filesystem;
using namespace scoreleak;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitStepError = 2;
constexpr int kExitConfigError = 3;

bool is_config_error(ErrorCode code) {
  return code == ErrorCode::BadSpec || code == ErrorCode::InvalidConfig ||
         code == ErrorCode::InvalidBounds || code == ErrorCode::ParseError;
}

Instance load_instance(const fs::path& path) {
  if (path.extension() == ".csv") {
    Instance instance;
    instance.labels = read_ground_truth_csv(path);
    const auto [lo, hi] = std::minmax_element(instance.labels.begin(), instance.labels.end());
    instance.bounds = Bounds::make(*lo, *hi);
    return instance;
  }
  return read_instance(path);
}

struct Options {
  std::string config;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> oracle_mode;
  std::optional<std::size_t> budget;
  // gen
  std::size_t n = 0;
  std::vector<double> bounds;
  std::vector<double> alphabet;
  // verify / replay
  std::string report;
  std::string instance;
  std::string submission;
};

int cmd_gen(const Options& opt) {
  InstanceSpec spec;
  if (!opt.config.empty()) {
    std::ifstream in(opt.config);
    if (!in) {
      throw Error(ErrorCode::BadSpec, "cannot open config '" + opt.config + "'");
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::BadSpec, e.what());
    }
    const nlohmann::json& section = doc.contains("instance") ? doc.at("instance") : doc;
    spec = InstanceSpec::from_json(section, fs::path(opt.config).parent_path());
  }
  if (opt.n > 0) {
    spec.n = opt.n;
  }
  if (!opt.bounds.empty()) {
    if (opt.bounds.size() != 2) {
      throw Error(ErrorCode::BadSpec, "--bounds takes exactly two values");
    }
    spec.bounds = Bounds::make(opt.bounds[0], opt.bounds[1]);
  }
  if (!opt.alphabet.empty()) {
    spec.alphabet = opt.alphabet;
  }
  if (opt.seed) {
    spec.seed = *opt.seed;
  }
  const Instance instance = gen_instance(spec);
  write_instance(instance, opt.out_dir);
  std::cout << "wrote " << instance.labels.size() << " labels to "
            << (fs::path(opt.out_dir) / "ground_truth.csv").string() << "\n";
  return kExitOk;
}

int cmd_run(const Options& opt) {
  ScenarioConfig config = ScenarioConfig::load(opt.config);
  if (opt.seed) {
    config.instance.seed = *opt.seed;
  }
  if (opt.oracle_mode) {
    config.oracle.mode = QuantizationMode::parse(*opt.oracle_mode);
  }
  if (opt.budget) {
    config.oracle.budget = *opt.budget;
  }
  const CampaignReport report = run_scenario(config, opt.out_dir);
  for (const StepRecord& step : report.steps) {
    std::cout << step.name << ": " << step.status << ", " << step.submissions
              << " submission(s)";
    if (step.best_rmse) {
      std::cout << ", best rmse " << *step.best_rmse;
    }
    if (step.status != "ok") {
      std::cout << " (" << step.detail << ")";
    }
    std::cout << "\n";
  }
  std::cout << "total submissions: " << report.total_submissions << "\n";
  if (report.final_rmse) {
    std::cout << "final rmse: " << *report.final_rmse
              << (report.exact_recovery ? " (exact recovery)" : "") << "\n";
  }
  return report.any_step_failed() ? kExitStepError : kExitOk;
}

int cmd_verify(const Options& opt) {
  const fs::path out_dir(opt.out_dir);
  const fs::path report_path = opt.report.empty() ? out_dir / "report.json" : fs::path(opt.report);
  const fs::path instance_path =
      opt.instance.empty() ? out_dir / "instance.json" : fs::path(opt.instance);

  std::ifstream in(report_path);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open report '" + report_path.string() + "'");
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  const CampaignReport report = CampaignReport::from_json(doc);
  const std::vector<Finding> findings =
      verify_report(report, load_instance(instance_path), report_path.parent_path());

  bool all_passed = true;
  for (const Finding& f : findings) {
    std::cout << (f.passed ? "PASS " : "FAIL ") << f.check << ": " << f.detail << "\n";
    all_passed = all_passed && f.passed;
  }
  return all_passed ? kExitOk : kExitStepError;
}

int cmd_replay(const Options& opt) {
  const Instance instance = load_instance(opt.instance);
  const Submission submission = read_submission_csv(opt.submission);
  OracleConfig config;
  config.mode = QuantizationMode::parse(opt.oracle_mode.value_or("exact"));
  config.budget = 1;
  Oracle oracle(instance.labels, instance.bounds, config);
  const OracleReading reading = oracle.evaluate(submission, "replay");
  std::cout << reading.score.text() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RMSE leaderboard oracle-attack toolkit"};
  app.require_subcommand(1);
  Options opt;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out-dir", opt.out_dir, "Output directory");
    sub->add_option("--seed", opt.seed, "Instance seed override");
  };

  CLI::App* gen = app.add_subcommand("gen", "Generate a seeded ground-truth instance");
  gen->add_option("--config", opt.config, "JSON instance spec or scenario config");
  gen->add_option("--n", opt.n, "Number of labels");
  gen->add_option("--bounds", opt.bounds, "Label bounds: lo hi")->expected(2);
  gen->add_option("--alphabet", opt.alphabet, "Finite label values")->expected(-1);
  add_common(gen);

  CLI::App* run = app.add_subcommand("run", "Run an attack campaign");
  run->add_option("--config", opt.config, "Scenario config (JSON)")->required();
  run->add_option("--oracle-mode", opt.oracle_mode, "exact | quantized:<d>");
  run->add_option("--budget", opt.budget, "Submission budget override");
  add_common(run);

  CLI::App* verify = app.add_subcommand("verify", "Check a campaign report against the truth");
  verify->add_option("--report", opt.report, "Report JSON (default <out-dir>/report.json)");
  verify->add_option("--instance", opt.instance,
                     "instance.json or ground-truth CSV (default <out-dir>/instance.json)");
  verify->add_option("--config", opt.config, "Unused; accepted for symmetry");
  add_common(verify);

  CLI::App* replay = app.add_subcommand("replay", "Re-score a submission CSV");
  replay->add_option("--instance", opt.instance, "instance.json or ground-truth CSV")->required();
  replay->add_option("--submission", opt.submission, "Submission CSV (id,prediction)")
      ->required();
  replay->add_option("--oracle-mode", opt.oracle_mode, "exact | quantized:<d>");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (gen->parsed()) {
      return cmd_gen(opt);
    }
    if (run->parsed()) {
      return cmd_run(opt);
    }
    if (verify->parsed()) {
      return cmd_verify(opt);
    }
    return cmd_replay(opt);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_config_error(e.code()) ? kExitConfigError : kExitStepError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStepError;
  }
}
