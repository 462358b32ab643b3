#pragma once

// Segment-mean probing and the mean-value improvement step.
//
// A 0/1 indicator of a segment turns one inner product into the segment mean.
// Given measured means, a candidate submission is improved by projecting each
// measured segment onto {sum fixed, lo <= entries <= hi}. The projection onto
// that box-hyperplane intersection has the closed form clip(v + lambda, lo, hi)
// for a scalar shift lambda, found here by bisection.

#include <cstddef>
#include <span>
#include <vector>

#include "scoreleak/oracle.hpp"
#include "scoreleak/probe.hpp"

namespace scoreleak {

/// Inclusive 1-based index range.
struct Segment {
  std::size_t start = 1;
  std::size_t end = 1;

  /// Throws BadSegment unless 1 <= start <= end <= n.
  static Segment make(std::size_t start, std::size_t end, std::size_t n);

  std::size_t length() const noexcept { return end - start + 1; }
  bool overlaps(const Segment& other) const noexcept {
    return start <= other.end && other.start <= end;
  }

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct SegmentMean {
  Segment segment;
  double mean = 0.0;
  double halfwidth = 0.0;
};

class SegmentStats {
 public:
  explicit SegmentStats(std::size_t n) : n_(n) {}

  std::size_t size() const noexcept { return n_; }
  const std::vector<SegmentMean>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

  void add(SegmentMean entry);
  /// Throws OverlappingSegments if any two recorded segments intersect.
  void require_disjoint() const;

 private:
  std::size_t n_;
  std::vector<SegmentMean> entries_;
};

/// Submits the indicator of `segment` and divides the inner product by its
/// length. The result is also appended to `stats`.
/// Throws NormUnknown, BudgetExhausted or BadSegment.
SegmentMean measure_segment_mean(Oracle& oracle, KnowledgeState& state, const Segment& segment,
                                 SegmentStats& stats);

struct Projection {
  std::vector<double> values;
  double shift = 0.0;  // lambda
};

/// Exact minimizer of 0.5*||out - candidate||^2 subject to
/// sum(out) = length * target_mean and bounds.lo <= out <= bounds.hi.
/// Throws InfeasibleMean if target_mean lies outside the bounds.
Projection project_segment(std::span<const double> candidate, double target_mean,
                           const Bounds& bounds);

/// Sum of clip(candidate + shift) over the segment. Nondecreasing in shift.
double clipped_shift_sum(std::span<const double> candidate, double shift, const Bounds& bounds);

/// Tolerance on the sum constraint: 1e-12 * length * max(1, |lo|, |hi|).
double projection_tolerance(std::size_t length, const Bounds& bounds) noexcept;

/// Projects every measured segment of `candidate` and leaves the rest alone.
/// Throws OverlappingSegments or LengthMismatch.
std::vector<double> improve_submission(std::span<const double> candidate,
                                       const SegmentStats& stats, const Bounds& bounds);

/// k contiguous segments covering 1..n whose lengths differ by at most one,
/// longer ones first. Throws BadArity unless 1 <= k <= n.
std::vector<Segment> plan_partition(std::size_t n, std::size_t k);

/// 0/1 indicator vector of a segment.
std::vector<double> indicator(const Segment& segment, std::size_t n);

}  // namespace scoreleak
