#include "scoreleak/mean_attack.hpp"

#include <algorithm>
#include <cmath>

#include "scoreleak/error.hpp"

namespace scoreleak {

namespace {

constexpr int kMaxBisectionSteps = 200;

}  // namespace

Segment Segment::make(std::size_t start, std::size_t end, std::size_t n) {
  if (start < 1 || start > end || end > n) {
    throw Error(ErrorCode::BadSegment, "segment (" + std::to_string(start) + ", " +
                                           std::to_string(end) + ") invalid for n = " +
                                           std::to_string(n));
  }
  return Segment{start, end};
}

void SegmentStats::add(SegmentMean entry) {
  Segment::make(entry.segment.start, entry.segment.end, n_);
  entries_.push_back(entry);
}

void SegmentStats::require_disjoint() const {
  std::vector<Segment> sorted;
  sorted.reserve(entries_.size());
  for (const SegmentMean& e : entries_) {
    sorted.push_back(e.segment);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const Segment& a, const Segment& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i - 1].overlaps(sorted[i])) {
      throw Error(ErrorCode::OverlappingSegments,
                  "segments starting at " + std::to_string(sorted[i - 1].start) + " and " +
                      std::to_string(sorted[i].start) + " intersect");
    }
  }
}

std::vector<double> indicator(const Segment& segment, std::size_t n) {
  std::vector<double> out(n, 0.0);
  std::fill(out.begin() + static_cast<std::ptrdiff_t>(segment.start - 1),
            out.begin() + static_cast<std::ptrdiff_t>(segment.end), 1.0);
  return out;
}

SegmentMean measure_segment_mean(Oracle& oracle, KnowledgeState& state, const Segment& segment,
                                 SegmentStats& stats) {
  const Segment checked = Segment::make(segment.start, segment.end, state.size());
  const Submission probe = Submission::from_doubles(indicator(checked, state.size()));
  const InnerProductRecord record =
      inner_product(oracle, state, probe,
                    "segment-mean:" + std::to_string(checked.start) + "-" +
                        std::to_string(checked.end));
  const Rational length(checked.length());
  SegmentMean measured{checked, to_double(record.value / length),
                       to_double(record.halfwidth / length)};
  stats.add(measured);
  return measured;
}

double clipped_shift_sum(std::span<const double> candidate, double shift, const Bounds& bounds) {
  KahanSum sum;
  for (const double v : candidate) {
    sum.add(std::clamp(v + shift, bounds.lo, bounds.hi));
  }
  return sum.value();
}

double projection_tolerance(std::size_t length, const Bounds& bounds) noexcept {
  return 1e-12 * static_cast<double>(length) * std::max({1.0, std::abs(bounds.lo),
                                                         std::abs(bounds.hi)});
}

Projection project_segment(std::span<const double> candidate, double target_mean,
                           const Bounds& bounds) {
  if (!(target_mean >= bounds.lo && target_mean <= bounds.hi)) {
    throw Error(ErrorCode::InfeasibleMean, "target mean " + format_shortest(target_mean) +
                                               " outside [" + format_shortest(bounds.lo) + ", " +
                                               format_shortest(bounds.hi) + "]");
  }
  if (candidate.empty()) {
    return Projection{};
  }

  if (candidate.size() == 1) {
    return Projection{{target_mean}, target_mean - candidate.front()};
  }

  const double length = static_cast<double>(candidate.size());
  const double target_sum = length * target_mean;
  const double tolerance = projection_tolerance(candidate.size(), bounds);

  const bool inside = std::all_of(candidate.begin(), candidate.end(),
                                  [&](double v) { return bounds.contains(v); });
  if (inside && std::abs(kahan_sum(candidate) - target_sum) <= tolerance) {
    return Projection{std::vector<double>(candidate.begin(), candidate.end()), 0.0};
  }

  const auto [min_it, max_it] = std::minmax_element(candidate.begin(), candidate.end());
  double low = bounds.lo - *max_it;   // every entry clips to lo
  double high = bounds.hi - *min_it;  // every entry clips to hi
  double shift = 0.5 * (low + high);
  for (int step = 0; step < kMaxBisectionSteps; ++step) {
    shift = 0.5 * (low + high);
    const double gap = clipped_shift_sum(candidate, shift, bounds) - target_sum;
    if (std::abs(gap) <= tolerance) {
      break;
    }
    if (gap < 0.0) {
      low = shift;
    } else {
      high = shift;
    }
  }

  Projection out{std::vector<double>(candidate.size()), shift};
  std::transform(candidate.begin(), candidate.end(), out.values.begin(),
                 [&](double v) { return std::clamp(v + shift, bounds.lo, bounds.hi); });
  return out;
}

std::vector<double> improve_submission(std::span<const double> candidate,
                                       const SegmentStats& stats, const Bounds& bounds) {
  if (candidate.size() != stats.size()) {
    throw Error(ErrorCode::LengthMismatch, "candidate has " + std::to_string(candidate.size()) +
                                               " entries, stats cover " +
                                               std::to_string(stats.size()));
  }
  stats.require_disjoint();

  std::vector<double> improved(candidate.begin(), candidate.end());
  for (const SegmentMean& entry : stats.entries()) {
    const auto first = static_cast<std::ptrdiff_t>(entry.segment.start - 1);
    const std::span<const double> block = candidate.subspan(
        static_cast<std::size_t>(first), entry.segment.length());
    // A rounded mean can land just outside the bounds; the true mean cannot.
    const double target = std::clamp(entry.mean, bounds.lo, bounds.hi);
    const Projection projected = project_segment(block, target, bounds);
    std::copy(projected.values.begin(), projected.values.end(), improved.begin() + first);
  }
  return improved;
}

std::vector<Segment> plan_partition(std::size_t n, std::size_t k) {
  if (k < 1 || k > n) {
    throw Error(ErrorCode::BadArity, "cannot split " + std::to_string(n) + " labels into " +
                                         std::to_string(k) + " segments");
  }
  std::vector<Segment> segments;
  segments.reserve(k);
  const std::size_t base = n / k;
  const std::size_t longer = n % k;
  std::size_t start = 1;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t length = base + (i < longer ? 1 : 0);
    segments.push_back(Segment{start, start + length - 1});
    start += length;
  }
  return segments;
}

}  // namespace scoreleak
