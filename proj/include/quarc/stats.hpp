#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "quarc/error.hpp"

namespace quarc {

/// Sample mean with a two-sided Student-t confidence interval.
struct Estimate {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;   // sample standard deviation
  double sem = 0.0;  // standard deviation of the mean
  double lo = 0.0;
  double hi = 0.0;

  double half_width() const { return hi - mean; }
  bool overlaps(const Estimate& o) const { return lo <= o.hi && o.lo <= hi; }
  /// Non-overlapping intervals with this one above.
  bool separated_above(const Estimate& o) const { return lo > o.hi; }
};

/// With fewer than two samples the interval is unbounded.
inline Estimate estimate(std::span<const double> xs, double level = 0.95) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level outside (0,1)");
  Estimate e;
  e.n = xs.size();
  if (xs.empty()) {
    e.mean = std::nan("");
    e.lo = -std::numeric_limits<double>::infinity();
    e.hi = std::numeric_limits<double>::infinity();
    return e;
  }
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / static_cast<double>(e.n);
  if (e.n < 2) {
    e.lo = -std::numeric_limits<double>::infinity();
    e.hi = std::numeric_limits<double>::infinity();
    return e;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - e.mean) * (x - e.mean);
  e.sd = std::sqrt(ss / static_cast<double>(e.n - 1));
  e.sem = e.sd / std::sqrt(static_cast<double>(e.n));
  const boost::math::students_t dist(static_cast<double>(e.n - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - level) / 2.0));
  e.lo = e.mean - t * e.sem;
  e.hi = e.mean + t * e.sem;
  return e;
}

/// Nearest-rank percentile (pct in (0, 100]).
inline double nearest_rank_percentile(std::vector<double> xs, double pct) {
  if (xs.empty()) throw DomainError("percentile of an empty sample");
  if (!(pct > 0.0 && pct <= 100.0)) throw DomainError("percentile outside (0,100]");
  std::sort(xs.begin(), xs.end());
  auto rank = static_cast<std::size_t>(std::ceil(pct * static_cast<double>(xs.size()) / 100.0 - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, xs.size());
  return xs[rank - 1];
}

}  // namespace quarc
