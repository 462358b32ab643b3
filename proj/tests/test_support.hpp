#pragma once

// Independent reference computations for tests. Nothing here calls into the
// code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "scoreleak/numeric.hpp"

namespace scoreleak::testing {

inline std::vector<double> uniform_vector(std::mt19937_64& rng, std::size_t n, double lo,
                                          double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> out(n);
  for (double& v : out) {
    v = dist(rng);
  }
  return out;
}

inline double direct_dot(std::span<const double> a, std::span<const double> b) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    total += static_cast<long double>(a[i]) * static_cast<long double>(b[i]);
  }
  return static_cast<double>(total);
}

/// sqrt(mean((s - y)^2)) with compensated summation in plain doubles.
inline double kahan_rmse(std::span<const double> s, std::span<const double> y) {
  KahanSum sum;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double d = s[i] - y[i];
    sum.add(d * d);
  }
  return std::sqrt(sum.value() / static_cast<double>(s.size()));
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double d = static_cast<long double>(a[i]) - b[i];
    total += d * d;
  }
  return static_cast<double>(total);
}

struct BruteProjection {
  std::vector<double> point;
  double objective = std::numeric_limits<double>::infinity();
};

/// Minimizes 0.5*||z - v||^2 over {sum z = len*mean, lo <= z <= hi} by
/// enumerating every assignment of coordinates to {at lo, at hi, free}. For
/// each, the free coordinates take the equality-constrained optimum v + mu;
/// the best feasible candidate is the global minimizer.
inline BruteProjection brute_force_projection(std::span<const double> v, double mean, double lo,
                                              double hi) {
  const std::size_t len = v.size();
  const double target = static_cast<double>(len) * mean;
  std::size_t combos = 1;
  for (std::size_t i = 0; i < len; ++i) {
    combos *= 3;
  }
  BruteProjection best;
  std::vector<double> z(len);
  for (std::size_t code = 0; code < combos; ++code) {
    std::size_t c = code;
    double fixed_sum = 0.0;
    double free_sum = 0.0;
    std::size_t free_count = 0;
    std::vector<int> state(len);
    for (std::size_t i = 0; i < len; ++i) {
      state[i] = static_cast<int>(c % 3);
      c /= 3;
      if (state[i] == 0) {
        fixed_sum += lo;
      } else if (state[i] == 1) {
        fixed_sum += hi;
      } else {
        free_sum += v[i];
        ++free_count;
      }
    }
    double mu = 0.0;
    if (free_count == 0) {
      if (std::abs(fixed_sum - target) > 1e-12 * std::max(1.0, std::abs(target))) {
        continue;
      }
    } else {
      mu = (target - fixed_sum - free_sum) / static_cast<double>(free_count);
    }
    bool feasible = true;
    for (std::size_t i = 0; i < len && feasible; ++i) {
      z[i] = state[i] == 0 ? lo : state[i] == 1 ? hi : v[i] + mu;
      feasible = z[i] >= lo - 1e-12 && z[i] <= hi + 1e-12;
    }
    if (!feasible) {
      continue;
    }
    const double objective = 0.5 * squared_distance(z, v);
    if (objective < best.objective) {
      best.objective = objective;
      best.point = z;
    }
  }
  return best;
}

}  // namespace scoreleak::testing
