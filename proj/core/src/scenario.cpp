#include "scoreleak/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "scoreleak/error.hpp"
#include "scoreleak/finite_label_attack.hpp"
#include "scoreleak/io.hpp"
#include "scoreleak/mean_attack.hpp"
#include "scoreleak/probe.hpp"
#include "scoreleak/regression_attack.hpp"

namespace scoreleak {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

Error bad_spec(const std::string& detail) { return Error(ErrorCode::BadSpec, detail); }

fs::path resolve(const fs::path& base_dir, const std::string& path) {
  const fs::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

Bounds parse_bounds(const json& value) {
  if (!value.is_array() || value.size() != 2) {
    throw bad_spec("bounds must be a two-element array [lo, hi]");
  }
  try {
    return Bounds::make(value[0].get<double>(), value[1].get<double>());
  } catch (const Error& e) {
    throw bad_spec(e.what());
  }
}

double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  }
  out << text;
  if (!out) {
    throw Error(ErrorCode::IoFailure, "write to '" + path.string() + "' failed");
  }
}

template <typename T>
ordered_json optional_json(const std::optional<T>& value) {
  return value ? ordered_json(*value) : ordered_json();
}

template <typename T>
std::optional<T> optional_field(const json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) {
    return std::nullopt;
  }
  return doc.at(key).get<T>();
}

bool needs_norm(const std::string& step) { return step == "mean-sweep" || step == "regression"; }

// Mutable campaign context shared by all steps.
struct Campaign {
  Oracle& oracle;
  KnowledgeState state;
  const Instance& instance;
  const fs::path& out_dir;
  std::optional<std::vector<double>> candidate;
  std::optional<double> best_rmse;
  std::vector<std::vector<double>> history;  // every candidate produced so far
};

// Scores a candidate, reusing the inner-product cache when the norm is known.
double observe(Campaign& run, const std::vector<double>& candidate, const std::string& tag) {
  const Submission submission = Submission::from_doubles(candidate);
  if (run.state.has_norm()) {
    return inner_product(run.oracle, run.state, submission, tag).rmse_seen.value();
  }
  return run.oracle.evaluate(submission, tag).rmse();
}

void offer_candidate(Campaign& run, StepRecord& record, std::size_t step_index,
                     std::vector<double> candidate) {
  const std::optional<double> known =
      record.observed_rmse ? record.observed_rmse : record.predicted_rmse;

  const std::string file = "candidates/step_" + std::to_string(step_index + 1) + ".csv";
  write_submission_csv(run.out_dir / file, Submission::from_doubles(candidate));
  record.candidate_file = file;
  run.history.push_back(candidate);

  if (!known) {
    // Projection onto a set containing y never moves farther from y, so the
    // improved candidate inherits the previous score as an upper bound.
    run.candidate = std::move(candidate);
  } else if (!run.best_rmse || *known <= *run.best_rmse) {
    run.candidate = std::move(candidate);
    run.best_rmse = known;
  }
}

void run_norm_probe(Campaign& run, StepRecord& record, std::size_t step_index) {
  probe_norm(run.oracle, run.state);
  record.observed_rmse = run.oracle.log().back().reading.rmse();
  offer_candidate(run, record, step_index, std::vector<double>(run.state.size(), 0.0));
}

void run_mean_sweep(Campaign& run, const CampaignStep& step, StepRecord& record,
                    std::size_t step_index) {
  const std::size_t n = run.state.size();
  SegmentStats stats(n);
  for (const Segment& segment : plan_partition(n, step.k)) {
    measure_segment_mean(run.oracle, run.state, segment, stats);
  }
  std::vector<double> start = run.candidate.value_or(std::vector<double>(n, 0.0));
  std::vector<double> improved = improve_submission(start, stats, run.instance.bounds);
  if (step.score) {
    record.observed_rmse = observe(run, improved, "mean-sweep:score");
  }
  offer_candidate(run, record, step_index, std::move(improved));
}

void run_regression(Campaign& run, const CampaignStep& step, StepRecord& record,
                    std::size_t step_index) {
  const std::size_t n = run.state.size();
  BasisKind kind;
  if (step.basis == "indicator-partition") {
    kind = IndicatorPartition{step.k};
  } else if (step.basis == "random-orthonormal") {
    kind = RandomOrthonormal{step.r, step.seed};
  } else {
    // from-candidates: every distinct candidate produced so far except zeros.
    FromSubmissions columns;
    std::set<std::vector<double>> seen;
    for (const auto& c : run.history) {
      const bool zero = std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; });
      if (!zero && seen.insert(c).second) {
        columns.columns.push_back(c);
      }
    }
    kind = std::move(columns);
  }
  const BasisMatrix basis = build_basis(kind, n);
  const AtyMeasurement aty = measure_aty(run.oracle, run.state, basis);
  const RegressionSolution solution =
      solve_combination(basis, aty, run.state.y_sq(), run.state.y_sq_halfwidth());
  record.predicted_rmse = solution.predicted_rmse;
  record.predicted_halfwidth = solution.predicted_rmse_halfwidth;
  if (step.score) {
    record.observed_rmse = observe(run, solution.combined, "regression:score");
  }
  offer_candidate(run, record, step_index, solution.combined);
}

void run_finite_label(Campaign& run, const CampaignStep& step, StepRecord& record,
                      std::size_t step_index) {
  if (!run.instance.alphabet) {
    throw bad_spec("finite-label needs an instance alphabet");
  }
  const LabelAlphabet codec = make_codec(*run.instance.alphabet);
  const std::size_t n = run.state.size();
  const Rational norm_halfwidth = run.state.has_norm()
                                      ? run.state.y_sq_halfwidth()
                                      : worst_case_norm_halfwidth(n, codec, run.oracle.mode());
  const FiniteLabelPlan plan = plan_segments(n, codec, run.oracle.mode(), norm_halfwidth);
  FiniteLabelResult result = run_attack(run.oracle, run.state, codec, plan);
  record.predicted_rmse = 0.0;
  record.detail = std::to_string(plan.segments.size()) + " segment(s), cap " +
                  std::to_string(plan.per_segment_length_cap);
  if (step.score) {
    record.observed_rmse = observe(run, result.labels, "finite-label:score");
  }
  offer_candidate(run, record, step_index, std::move(result.labels));
}

void run_score(Campaign& run, StepRecord& record, bool final_step, CampaignReport& report) {
  const std::vector<double> candidate =
      run.candidate.value_or(std::vector<double>(run.state.size(), 0.0));
  const Submission submission = Submission::from_doubles(candidate);
  const OracleReading reading =
      run.oracle.evaluate(submission, final_step ? "submit-final" : "score");
  record.observed_rmse = reading.rmse();
  if (!run.best_rmse || *record.observed_rmse < *run.best_rmse) {
    run.best_rmse = record.observed_rmse;
  }
  if (final_step) {
    write_submission_csv(run.out_dir / "final_submission.csv", submission);
    report.final_rmse = record.observed_rmse;
    report.exact_recovery = reading.score.squared() == 0;
  }
}

}  // namespace

InstanceSpec InstanceSpec::from_json(const json& doc, const fs::path& base_dir) {
  try {
    InstanceSpec spec;
    if (doc.contains("file")) {
      const fs::path metadata = resolve(base_dir, doc.at("file").get<std::string>());
      const Instance instance = read_instance(metadata);
      spec.n = instance.labels.size();
      spec.bounds = instance.bounds;
      spec.alphabet = instance.alphabet;
      spec.seed = instance.seed;
      std::ifstream in(metadata);
      const json meta = json::parse(in);
      spec.ground_truth =
          resolve(metadata.parent_path(), meta.at("ground_truth").get<std::string>());
      return spec;
    }
    spec.n = doc.value("n", std::size_t{0});
    if (doc.contains("bounds")) {
      spec.bounds = parse_bounds(doc.at("bounds"));
    }
    spec.alphabet = optional_field<std::vector<double>>(doc, "alphabet");
    spec.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("ground_truth")) {
      spec.ground_truth = resolve(base_dir, doc.at("ground_truth").get<std::string>());
    }
    return spec;
  } catch (const json::exception& e) {
    throw bad_spec(std::string("instance: ") + e.what());
  }
}

Instance gen_instance(const InstanceSpec& spec) {
  Instance instance;
  instance.seed = spec.seed;
  instance.alphabet = spec.alphabet;

  if (spec.alphabet) {
    try {
      make_codec(*spec.alphabet);
    } catch (const Error& e) {
      throw bad_spec(std::string("alphabet: ") + e.what());
    }
    std::vector<double> sorted = *spec.alphabet;
    std::sort(sorted.begin(), sorted.end());
    instance.alphabet = sorted;
    instance.bounds = spec.bounds.value_or(Bounds{sorted.front(), sorted.back()});
    for (const double v : sorted) {
      if (!instance.bounds.contains(v)) {
        throw bad_spec("alphabet value " + format_shortest(v) + " lies outside the bounds");
      }
    }
  } else {
    if (!spec.bounds) {
      throw bad_spec("continuous instances need bounds");
    }
    instance.bounds = *spec.bounds;
  }

  if (spec.ground_truth) {
    instance.labels = read_ground_truth_csv(*spec.ground_truth);
  } else {
    if (spec.n == 0) {
      throw bad_spec("instance size n must be positive");
    }
    std::mt19937_64 rng(spec.seed);
    instance.labels.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
      if (instance.alphabet) {
        instance.labels.push_back((*instance.alphabet)[rng() % instance.alphabet->size()]);
      } else {
        const double u = uniform_unit(rng);
        instance.labels.push_back(
            std::min(instance.bounds.hi,
                     instance.bounds.lo + u * (instance.bounds.hi - instance.bounds.lo)));
      }
    }
  }

  try {
    GroundTruth::make(instance.labels, instance.bounds);
    if (instance.alphabet) {
      const LabelAlphabet codec = make_codec(*instance.alphabet);
      for (const double label : instance.labels) {
        codec.index_of(label);
      }
    }
  } catch (const Error& e) {
    throw bad_spec(e.what());
  }
  return instance;
}

void write_instance(const Instance& instance, const fs::path& dir) {
  fs::create_directories(dir);
  write_ground_truth_csv(dir / "ground_truth.csv", instance.labels);
  ordered_json meta;
  meta["n"] = instance.labels.size();
  meta["bounds"] = {instance.bounds.lo, instance.bounds.hi};
  meta["alphabet"] = optional_json(instance.alphabet);
  meta["seed"] = instance.seed;
  meta["ground_truth"] = "ground_truth.csv";
  write_text(dir / "instance.json", meta.dump(2) + "\n");
}

Instance read_instance(const fs::path& metadata_json) {
  std::ifstream in(metadata_json);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open '" + metadata_json.string() + "'");
  }
  try {
    const json meta = json::parse(in);
    Instance instance;
    instance.bounds = parse_bounds(meta.at("bounds"));
    instance.alphabet = optional_field<std::vector<double>>(meta, "alphabet");
    instance.seed = meta.value("seed", std::uint64_t{0});
    instance.labels = read_ground_truth_csv(
        resolve(metadata_json.parent_path(), meta.at("ground_truth").get<std::string>()));
    return instance;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, metadata_json.string() + ": " + e.what());
  }
}

ScenarioConfig ScenarioConfig::from_json(const json& doc, const fs::path& base_dir) {
  try {
    ScenarioConfig config;
    config.instance = InstanceSpec::from_json(doc.at("instance"), base_dir);

    const json& oracle = doc.at("oracle");
    try {
      config.oracle.mode = QuantizationMode::parse(oracle.value("mode", std::string("exact")));
    } catch (const Error& e) {
      throw bad_spec(e.what());
    }
    const auto budget = oracle.at("budget").get<long long>();
    if (budget < 0) {
      throw bad_spec("budget must be nonnegative");
    }
    config.oracle.budget = static_cast<std::size_t>(budget);

    static const std::set<std::string> kKnown = {"norm-probe", "mean-sweep",   "regression",
                                                 "finite-label", "score", "submit-final"};
    bool norm_available = false;
    for (const json& entry : doc.at("campaign")) {
      CampaignStep step;
      step.name = entry.at("step").get<std::string>();
      if (!kKnown.count(step.name)) {
        throw bad_spec("unknown campaign step '" + step.name + "'");
      }
      if (needs_norm(step.name) && !norm_available) {
        throw bad_spec("step '" + step.name + "' needs an earlier norm-probe or finite-label step");
      }
      if (step.name == "norm-probe" || step.name == "finite-label") {
        norm_available = true;
      }
      step.k = entry.value("k", std::size_t{0});
      step.r = entry.value("r", std::size_t{0});
      step.seed = entry.value("seed", std::uint64_t{0});
      step.basis = entry.value("basis", std::string());
      step.score = entry.value("score", step.name == "mean-sweep");
      if (step.name == "mean-sweep" && step.k == 0) {
        throw bad_spec("mean-sweep needs k >= 1");
      }
      if (step.name == "regression") {
        if (step.basis != "indicator-partition" && step.basis != "random-orthonormal" &&
            step.basis != "from-candidates") {
          throw bad_spec("regression basis must be indicator-partition, random-orthonormal or "
                         "from-candidates");
        }
        if (step.basis == "indicator-partition" && step.k == 0) {
          throw bad_spec("indicator-partition needs k >= 1");
        }
        if (step.basis == "random-orthonormal" && step.r == 0) {
          throw bad_spec("random-orthonormal needs r >= 1");
        }
      }
      config.campaign.push_back(step);
    }
    return config;
  } catch (const json::exception& e) {
    throw bad_spec(std::string("scenario: ") + e.what());
  }
}

ScenarioConfig ScenarioConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw bad_spec("cannot open config '" + path.string() + "'");
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw bad_spec(path.string() + ": " + e.what());
  }
  return from_json(doc, path.parent_path());
}

bool CampaignReport::any_step_failed() const {
  return std::any_of(steps.begin(), steps.end(),
                     [](const StepRecord& s) { return s.status != "ok"; });
}

ordered_json CampaignReport::to_json() const {
  ordered_json doc;
  doc["n"] = n;
  doc["mode"] = mode;
  doc["budget"] = budget;
  auto steps_json = ordered_json::array();
  for (const StepRecord& s : steps) {
    ordered_json step;
    step["step"] = s.name;
    step["status"] = s.status;
    step["detail"] = s.detail;
    step["submissions"] = s.submissions;
    step["best_rmse"] = optional_json(s.best_rmse);
    step["predicted_rmse"] = optional_json(s.predicted_rmse);
    step["predicted_halfwidth"] = optional_json(s.predicted_halfwidth);
    step["observed_rmse"] = optional_json(s.observed_rmse);
    step["candidate_file"] = optional_json(s.candidate_file);
    steps_json.push_back(std::move(step));
  }
  doc["steps"] = std::move(steps_json);
  ordered_json summary;
  summary["total_submissions"] = total_submissions;
  summary["final_rmse"] = optional_json(final_rmse);
  summary["exact_recovery"] = exact_recovery;
  doc["summary"] = std::move(summary);
  return doc;
}

CampaignReport CampaignReport::from_json(const json& doc) {
  try {
    CampaignReport report;
    report.n = doc.at("n").get<std::size_t>();
    report.mode = doc.at("mode").get<std::string>();
    report.budget = doc.at("budget").get<std::size_t>();
    for (const json& s : doc.at("steps")) {
      StepRecord step;
      step.name = s.at("step").get<std::string>();
      step.status = s.at("status").get<std::string>();
      step.detail = s.value("detail", std::string());
      step.submissions = s.at("submissions").get<std::size_t>();
      step.best_rmse = optional_field<double>(s, "best_rmse");
      step.predicted_rmse = optional_field<double>(s, "predicted_rmse");
      step.predicted_halfwidth = optional_field<double>(s, "predicted_halfwidth");
      step.observed_rmse = optional_field<double>(s, "observed_rmse");
      step.candidate_file = optional_field<std::string>(s, "candidate_file");
      report.steps.push_back(std::move(step));
    }
    const json& summary = doc.at("summary");
    report.total_submissions = summary.at("total_submissions").get<std::size_t>();
    report.final_rmse = optional_field<double>(summary, "final_rmse");
    report.exact_recovery = summary.at("exact_recovery").get<bool>();
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("report: ") + e.what());
  }
}

CampaignReport run_scenario(const ScenarioConfig& config, const fs::path& out_dir) {
  const Instance instance = gen_instance(config.instance);
  fs::create_directories(out_dir / "candidates");
  write_instance(instance, out_dir);

  OracleConfig oracle_config = config.oracle;
  oracle_config.test_instrumentation = false;
  Oracle oracle(instance.labels, instance.bounds, oracle_config);
  Campaign run{oracle, KnowledgeState::for_oracle(oracle), instance, out_dir, {}, {}, {}};

  CampaignReport report;
  report.n = oracle.size();
  report.mode = oracle.mode().to_string();
  report.budget = oracle_config.budget;

  std::vector<std::string> step_of_submission;
  for (std::size_t i = 0; i < config.campaign.size(); ++i) {
    const CampaignStep& step = config.campaign[i];
    StepRecord record;
    record.name = step.name;
    const std::size_t before = oracle.log().size();
    try {
      if (step.name == "norm-probe") {
        run_norm_probe(run, record, i);
      } else if (step.name == "mean-sweep") {
        run_mean_sweep(run, step, record, i);
      } else if (step.name == "regression") {
        run_regression(run, step, record, i);
      } else if (step.name == "finite-label") {
        run_finite_label(run, step, record, i);
      } else {
        run_score(run, record, step.name == "submit-final", report);
      }
    } catch (const Error& e) {
      record.status = std::string(to_string(e.code()));
      record.detail = e.what();
    }
    record.submissions = oracle.log().size() - before;
    step_of_submission.resize(oracle.log().size(), step.name);
    record.best_rmse = run.best_rmse;
    report.steps.push_back(std::move(record));
  }
  report.total_submissions = oracle.log().size();

  write_text(out_dir / "report.json", report.to_json().dump(2) + "\n");
  oracle.export_log(out_dir / "submissions.jsonl");

  std::string trajectory = "submission_index,rmse_reported,step\n";
  for (const SubmissionRecord& record : oracle.log()) {
    trajectory += std::to_string(record.submission_index) + "," + record.reading.score.text() +
                  "," + step_of_submission[record.submission_index - 1] + "\n";
  }
  write_text(out_dir / "trajectory.csv", trajectory);

  ordered_json info;
  info["finished_at_unix_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                                    std::chrono::system_clock::now().time_since_epoch())
                                    .count();
  write_text(out_dir / "run_info.json", info.dump(2) + "\n");
  return report;
}

double rescore(const Submission& submission, std::span<const double> labels) {
  const auto [lo, hi] = std::minmax_element(labels.begin(), labels.end());
  Oracle oracle(std::vector<double>(labels.begin(), labels.end()), Bounds::make(*lo, *hi),
                OracleConfig{QuantizationMode::exact(), 1, false});
  return oracle.evaluate(submission).rmse();
}

std::vector<Finding> verify_report(const CampaignReport& report, const Instance& instance,
                                   const fs::path& out_dir) {
  std::vector<Finding> findings;
  const auto add = [&](std::string check, bool passed, std::string detail) {
    findings.push_back(Finding{std::move(check), passed, std::move(detail)});
  };

  const QuantizationMode mode = QuantizationMode::parse(report.mode);
  const double eps = to_double(mode.epsilon());
  const double observe_tolerance = mode.is_exact() ? 1e-12 : eps + 1e-12;

  add("instance-size", report.n == instance.labels.size(),
      "report n = " + std::to_string(report.n) + ", instance n = " +
          std::to_string(instance.labels.size()));

  bool monotone = true;
  std::optional<double> previous;
  for (const StepRecord& step : report.steps) {
    if (previous && (!step.best_rmse || *step.best_rmse > *previous)) {
      monotone = false;
    }
    if (step.best_rmse) {
      previous = step.best_rmse;
    }
  }
  add("best-rmse-monotone", monotone, "best rmse never increases across steps");

  std::size_t summed = 0;
  for (const StepRecord& step : report.steps) {
    summed += step.submissions;
  }
  add("submission-total", summed == report.total_submissions && summed <= report.budget,
      "steps sum to " + std::to_string(summed) + ", summary says " +
          std::to_string(report.total_submissions));

  if (std::ifstream log(out_dir / "submissions.jsonl"); log) {
    std::size_t lines = 0;
    for (std::string line; std::getline(log, line);) {
      lines += line.empty() ? 0 : 1;
    }
    add("log-count", lines == report.total_submissions,
        "oracle log holds " + std::to_string(lines) + " records");
  }

  for (std::size_t i = 0; i < report.steps.size(); ++i) {
    const StepRecord& step = report.steps[i];
    if (!step.candidate_file) {
      continue;
    }
    const std::string label = "step-" + std::to_string(i + 1) + "-" + step.name;
    double truth = 0.0;
    try {
      truth = rescore(read_submission_csv(out_dir / *step.candidate_file), instance.labels);
    } catch (const Error& e) {
      add(label + "-candidate", false, e.what());
      continue;
    }
    if (step.predicted_rmse) {
      const double tolerance =
          mode.is_exact() ? 1e-9 : step.predicted_halfwidth.value_or(0.0) + eps + 1e-9;
      const double gap = std::abs(*step.predicted_rmse - truth);
      add(label + "-predicted", gap <= tolerance,
          "predicted " + format_shortest(*step.predicted_rmse) + " vs true " +
              format_shortest(truth));
    }
    if (step.observed_rmse) {
      const double gap = std::abs(*step.observed_rmse - truth);
      add(label + "-observed", gap <= observe_tolerance * std::max(1.0, truth),
          "observed " + format_shortest(*step.observed_rmse) + " vs true " +
              format_shortest(truth));
    }
  }

  if (report.final_rmse) {
    try {
      const Submission final_submission = read_submission_csv(out_dir / "final_submission.csv");
      const double truth = rescore(final_submission, instance.labels);
      add("final-rmse", std::abs(*report.final_rmse - truth) <= observe_tolerance,
          "reported " + format_shortest(*report.final_rmse) + " vs true " +
              format_shortest(truth));
      const bool identical = final_submission.entries() == Submission::from_doubles(instance.labels).entries();
      add("exact-recovery", report.exact_recovery == identical,
          std::string("report claims ") + (report.exact_recovery ? "" : "no ") +
              "exact recovery; final submission " + (identical ? "equals" : "differs from") +
              " the ground truth");
    } catch (const Error& e) {
      add("final-submission", false, e.what());
    }
  } else if (report.exact_recovery) {
    add("exact-recovery", false, "exact recovery claimed without a final submission");
  }
  return findings;
}

}  // namespace scoreleak
