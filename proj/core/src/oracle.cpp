#include "scoreleak/oracle.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "scoreleak/error.hpp"

namespace scoreleak {

namespace {

std::string sha256_hex(std::string_view data) {
  unsigned char hash[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), hash, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoFailure, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[hash[i] >> 4]);
    out.push_back(kHex[hash[i] & 0xf]);
  }
  return out;
}

// Rounds sqrt(mean_squared) half-to-even to `digits` decimals, exactly.
BigInt quantize_root(const Rational& mean_squared, int digits) {
  const Rational scaled = mean_squared * Rational(pow10(static_cast<unsigned>(2 * digits)));
  const BigInt root = boost::multiprecision::sqrt(floor_of(scaled));
  // Compare scaled against (root + 1/2)^2 = root^2 + root + 1/4.
  const Rational midpoint_sq = Rational(root * root + root) + Rational(1, 4);
  if (scaled > midpoint_sq) {
    return root + 1;
  }
  if (scaled < midpoint_sq) {
    return root;
  }
  return (root % 2 == 0) ? root : root + 1;
}

}  // namespace

Bounds Bounds::make(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorCode::InvalidBounds, "bounds must be finite");
  }
  if (lo > hi) {
    throw Error(ErrorCode::InvalidBounds, "lower bound exceeds upper bound");
  }
  return Bounds{lo, hi};
}

double Bounds::magnitude() const noexcept { return std::max(std::abs(lo), std::abs(hi)); }

GroundTruth GroundTruth::make(std::vector<double> labels, Bounds bounds) {
  bounds = Bounds::make(bounds.lo, bounds.hi);
  if (labels.empty()) {
    throw Error(ErrorCode::EmptyLabels, "ground truth needs at least one label");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(labels[i])) {
      throw Error(ErrorCode::NonFiniteEntry, "label " + std::to_string(i + 1) + " is not finite");
    }
    if (!bounds.contains(labels[i])) {
      throw Error(ErrorCode::LabelOutOfBounds,
                  "label " + std::to_string(i + 1) + " = " + format_shortest(labels[i]) +
                      " outside [" + format_shortest(bounds.lo) + ", " +
                      format_shortest(bounds.hi) + "]");
    }
  }
  return GroundTruth{std::move(labels), bounds};
}

QuantizationMode QuantizationMode::quantized(int digits) {
  if (digits < kMinDigits || digits > kMaxDigits) {
    throw Error(ErrorCode::InvalidConfig,
                "quantization digits must be in [1, 15], got " + std::to_string(digits));
  }
  return QuantizationMode(digits);
}

QuantizationMode QuantizationMode::parse(std::string_view text) {
  if (text == "exact") {
    return exact();
  }
  constexpr std::string_view kPrefix = "quantized:";
  if (text.substr(0, kPrefix.size()) == kPrefix) {
    const std::string_view rest = text.substr(kPrefix.size());
    int digits = 0;
    const auto [end, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), digits);
    if (ec == std::errc{} && end == rest.data() + rest.size() && !rest.empty()) {
      return quantized(digits);
    }
  }
  throw Error(ErrorCode::InvalidConfig,
              "oracle mode must be 'exact' or 'quantized:<d>', got '" + std::string(text) + "'");
}

Rational QuantizationMode::epsilon() const {
  if (is_exact()) {
    return Rational(0);
  }
  return Rational(BigInt(1), 2 * pow10(static_cast<unsigned>(digits_)));
}

std::string QuantizationMode::to_string() const {
  return is_exact() ? std::string("exact") : "quantized:" + std::to_string(digits_);
}

ReportedScore ReportedScore::exact(Rational mean_squared) {
  ReportedScore score;
  score.squared_ = std::move(mean_squared);
  return score;
}

ReportedScore ReportedScore::quantized(BigInt scaled, int digits) {
  ReportedScore score;
  score.digits_ = digits;
  score.squared_ = Rational(scaled * scaled, pow10(static_cast<unsigned>(2 * digits)));
  score.scaled_ = std::move(scaled);
  return score;
}

double ReportedScore::value() const {
  if (digits_ == 0) {
    return sqrt_to_double(squared_);
  }
  return to_double(decimal());
}

Rational ReportedScore::decimal() const {
  if (digits_ == 0) {
    throw Error(ErrorCode::InvalidConfig, "exact scores have no finite decimal form");
  }
  return Rational(scaled_, pow10(static_cast<unsigned>(digits_)));
}

std::string ReportedScore::text() const {
  if (digits_ == 0) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value());
    return buffer;
  }
  std::string digits = scaled_.str();
  const auto places = static_cast<std::size_t>(digits_);
  if (digits.size() <= places) {
    digits.insert(0, places - digits.size() + 1, '0');
  }
  digits.insert(digits.size() - places, 1, '.');
  return digits;
}

Submission::Submission(std::vector<Rational> entries) : entries_(std::move(entries)) {}

Submission Submission::from_doubles(std::span<const double> values) {
  std::vector<Rational> entries;
  entries.reserve(values.size());
  for (const double v : values) {
    entries.push_back(to_rational(v));
  }
  return Submission(std::move(entries));
}

Submission Submission::zeros(std::size_t n) { return Submission(std::vector<Rational>(n)); }

Rational Submission::squared_norm() const {
  Rational total;
  for (const Rational& e : entries_) {
    total += e * e;
  }
  return total;
}

Rational Submission::sum() const {
  Rational total;
  for (const Rational& e : entries_) {
    total += e;
  }
  return total;
}

bool Submission::is_zero() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const Rational& e) { return e == 0; });
}

std::string Submission::canonical_text() const {
  std::string text;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i > 0) {
      text.push_back(',');
    }
    text += format_exact(entries_[i]);
  }
  return text;
}

std::string Submission::digest() const { return sha256_hex(canonical_text()); }

std::vector<double> Submission::to_doubles() const {
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const Rational& e : entries_) {
    out.push_back(to_double(e));
  }
  return out;
}

Oracle::Oracle(std::vector<double> labels, Bounds bounds, OracleConfig config)
    : Oracle(GroundTruth::make(std::move(labels), bounds), config) {}

Oracle::Oracle(GroundTruth truth, OracleConfig config)
    : truth_(GroundTruth::make(std::move(truth.labels), truth.bounds)), config_(config) {
  exact_labels_.reserve(truth_.size());
  for (const double label : truth_.labels) {
    exact_labels_.push_back(to_rational(label));
  }
}

Rational Oracle::squared_error(const Submission& submission) const {
  Rational total;
  Rational diff;
  for (std::size_t i = 0; i < exact_labels_.size(); ++i) {
    diff = submission[i] - exact_labels_[i];
    total += diff * diff;
  }
  return total;
}

OracleReading Oracle::evaluate(const Submission& submission, std::string_view tag) {
  if (remaining_budget() == 0) {
    throw Error(ErrorCode::BudgetExhausted,
                "all " + std::to_string(config_.budget) + " submissions used");
  }
  if (submission.size() != size()) {
    throw Error(ErrorCode::LengthMismatch, "submission has " + std::to_string(submission.size()) +
                                               " entries, expected " + std::to_string(size()));
  }

  const Rational mean_squared = squared_error(submission) / Rational(size());
  OracleReading reading{
      config_.mode.is_exact()
          ? ReportedScore::exact(mean_squared)
          : ReportedScore::quantized(quantize_root(mean_squared, config_.mode.digits()),
                                     config_.mode.digits()),
      config_.mode, log_.size() + 1};

  log_.push_back(SubmissionRecord{reading.submission_index, submission.digest(), reading,
                                  std::string(tag)});
  return reading;
}

std::size_t Oracle::export_log(const std::filesystem::path& destination) const {
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoFailure, "cannot open '" + destination.string() + "' for writing");
  }
  for (const SubmissionRecord& record : log_) {
    out << log_line(record) << '\n';
  }
  out.flush();
  if (!out) {
    throw Error(ErrorCode::IoFailure, "write to '" + destination.string() + "' failed");
  }
  return log_.size();
}

std::span<const double> Oracle::reveal_labels_for_testing() const {
  if (!config_.test_instrumentation) {
    throw Error(ErrorCode::InstrumentationDisabled, "hidden labels are not observable");
  }
  return truth_.labels;
}

std::string log_line(const SubmissionRecord& record) {
  nlohmann::ordered_json line;
  line["index"] = record.submission_index;
  line["digest"] = record.payload_digest;
  const double rmse = record.reading.rmse();
  if (std::isfinite(rmse)) {
    line["rmse"] = rmse;
  } else {
    line["rmse"] = record.reading.score.text();
  }
  line["mode"] = record.reading.mode.to_string();
  line["tag"] = record.purpose_tag;
  return line.dump();
}

}  // namespace scoreleak
