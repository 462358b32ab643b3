#include "scoreleak/probe.hpp"

#include "scoreleak/error.hpp"

namespace scoreleak {

namespace {

Rational reported_root(const ReportedScore& score, const QuantizationMode& mode) {
  // Only needed when eps > 0, where the reported score is an exact decimal.
  return mode.is_exact() ? Rational(0) : score.decimal();
}

}  // namespace

Rational scaled_square_halfwidth(const ReportedScore& score, const QuantizationMode& mode,
                                 std::size_t n) {
  if (mode.is_exact()) {
    return Rational(0);
  }
  const Rational eps = mode.epsilon();
  return Rational(n) * (Rational(2) * reported_root(score, mode) * eps + eps * eps);
}

KnowledgeState::KnowledgeState(std::size_t n, QuantizationMode mode) : n_(n), mode_(mode) {}

KnowledgeState KnowledgeState::for_oracle(const Oracle& oracle) {
  return KnowledgeState(oracle.size(), oracle.mode());
}

const Rational& KnowledgeState::y_sq() const {
  if (!y_sq_) {
    throw Error(ErrorCode::NormUnknown, "probe the label norm first");
  }
  return *y_sq_;
}

const InnerProductRecord* KnowledgeState::find(std::string_view digest) const {
  const auto it = cache_.find(digest);
  return it == cache_.end() ? nullptr : &it->second;
}

Rational probe_norm(Oracle& oracle, KnowledgeState& state) {
  if (state.has_norm()) {
    throw Error(ErrorCode::AlreadyProbed, "label norm is already known");
  }
  if (oracle.size() != state.size()) {
    throw Error(ErrorCode::LengthMismatch, "knowledge state belongs to a different instance");
  }

  const Submission zeros = Submission::zeros(oracle.size());
  const OracleReading reading = oracle.evaluate(zeros, "norm-probe");
  const Rational y_sq = Rational(state.size()) * reading.score.squared();

  state.y_sq_ = y_sq;
  state.y_sq_halfwidth_ = scaled_square_halfwidth(reading.score, state.mode(), state.size());
  // <0, y> = 0 regardless of the score, so the zero vector is cached as exact.
  state.cache_.insert_or_assign(zeros.digest(),
                                InnerProductRecord{Rational(0), Rational(0), Rational(0),
                                                   reading.score});
  return y_sq;
}

Rational ip_halfwidth(const OracleReading& reading, const KnowledgeState& state) {
  if (!state.has_norm()) {
    throw Error(ErrorCode::NormUnknown, "probe the label norm first");
  }
  if (reading.mode.is_exact()) {
    return Rational(0);
  }
  return (state.y_sq_halfwidth() +
          scaled_square_halfwidth(reading.score, reading.mode, state.size())) /
         Rational(2);
}

InnerProductRecord inner_product(Oracle& oracle, KnowledgeState& state,
                                 const Submission& submission, std::string_view tag) {
  if (submission.size() != state.size()) {
    throw Error(ErrorCode::LengthMismatch, "submission has " + std::to_string(submission.size()) +
                                               " entries, expected " +
                                               std::to_string(state.size()));
  }
  if (!state.has_norm()) {
    throw Error(ErrorCode::NormUnknown, "probe the label norm first");
  }

  std::string digest = submission.digest();
  if (const InnerProductRecord* hit = state.find(digest)) {
    return *hit;
  }

  const OracleReading reading = oracle.evaluate(submission, tag);
  const Rational hat_y_sq = submission.squared_norm();
  const Rational squared_error = Rational(state.size()) * reading.score.squared();
  InnerProductRecord record{(hat_y_sq + state.y_sq() - squared_error) / Rational(2),
                            ip_halfwidth(reading, state), hat_y_sq, reading.score};
  state.cache_.emplace(std::move(digest), record);
  return record;
}

nlohmann::json KnowledgeState::to_json() const {
  nlohmann::ordered_json doc;
  doc["n"] = n_;
  doc["mode"] = mode_.to_string();
  doc["y_sq"] = y_sq_ ? nlohmann::ordered_json(format_exact(*y_sq_)) : nlohmann::ordered_json();
  doc["y_sq_halfwidth"] = format_exact(y_sq_halfwidth_);
  auto entries = nlohmann::ordered_json::array();
  for (const auto& [digest, record] : cache_) {
    nlohmann::ordered_json entry;
    entry["digest"] = digest;
    entry["value"] = format_exact(record.value);
    entry["halfwidth"] = format_exact(record.halfwidth);
    entry["hat_y_sq"] = format_exact(record.hat_y_sq);
    entry["rmse_seen"] = format_exact(record.rmse_seen.squared());
    entries.push_back(std::move(entry));
  }
  doc["cache"] = std::move(entries);
  return nlohmann::json::parse(doc.dump());
}

KnowledgeState KnowledgeState::from_json(const nlohmann::json& doc) {
  try {
    KnowledgeState state(doc.at("n").get<std::size_t>(),
                         QuantizationMode::parse(doc.at("mode").get<std::string>()));
    if (!doc.at("y_sq").is_null()) {
      state.y_sq_ = parse_exact(doc.at("y_sq").get<std::string>());
    }
    state.y_sq_halfwidth_ = parse_exact(doc.at("y_sq_halfwidth").get<std::string>());
    for (const auto& entry : doc.at("cache")) {
      // rmse_seen is checkpointed as its exact square.
      const Rational squared = parse_exact(entry.at("rmse_seen").get<std::string>());
      ReportedScore seen = ReportedScore::exact(squared);
      if (!state.mode_.is_exact()) {
        const Rational scaled = squared * Rational(pow10(2 * state.mode_.digits()));
        seen = ReportedScore::quantized(boost::multiprecision::sqrt(floor_of(scaled)),
                                        state.mode_.digits());
      }
      state.cache_.emplace(
          entry.at("digest").get<std::string>(),
          InnerProductRecord{parse_exact(entry.at("value").get<std::string>()),
                             parse_exact(entry.at("halfwidth").get<std::string>()),
                             parse_exact(entry.at("hat_y_sq").get<std::string>()),
                             std::move(seen)});
    }
    return state;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("knowledge state: ") + e.what());
  }
}

}  // namespace scoreleak
