#pragma once

// Aggregate metrics over episode scores and stratified percentile-bootstrap
// confidence intervals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wsts/random.hpp"

namespace wsts::stats {

inline double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean: empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double median(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("median: empty sample");
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
inline double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

/// Interquartile mean: drops floor(n/4) scores from each end of the sorted
/// sample and averages the rest.
inline double iqm(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("iqm: empty sample");
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  const std::size_t cut = v.size() / 4;
  double s = 0.0;
  for (std::size_t i = cut; i < v.size() - cut; ++i) s += v[i];
  return s / static_cast<double>(v.size() - 2 * cut);
}

/// Linear-interpolation percentile (q in [0, 100]) of an unsorted sample.
inline double percentile(std::span<const double> x, double q) {
  if (x.empty()) throw std::invalid_argument("percentile: empty sample");
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

enum class Metric { Mean, Median, Iqm };

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::Mean: return "mean";
    case Metric::Median: return "median";
    case Metric::Iqm: return "iqm";
  }
  return "?";
}

inline double compute(Metric m, std::span<const double> x) {
  switch (m) {
    case Metric::Mean: return mean(x);
    case Metric::Median: return median(x);
    case Metric::Iqm: return iqm(x);
  }
  throw std::invalid_argument("compute: unknown metric");
}

struct Interval {
  double point{0.0};
  double lower{0.0};
  double upper{0.0};
};

/// Scores grouped by stratum (environment / dataset).
using Strata = std::map<std::string, std::vector<double>>;

/// Stratified percentile bootstrap. Replicate b resamples every stratum (in
/// key order) with replacement, drawing index floor(u * n) with u from
/// uniform01, pools the resampled scores and evaluates `metric`. The
/// interval is the [alpha/2, 1 - alpha/2] percentile range of the replicates.
inline Interval stratified_bootstrap(const Strata& strata, Metric metric, std::size_t n_bootstrap,
                                     std::uint64_t seed, double confidence = 0.95) {
  if (strata.empty()) throw std::invalid_argument("stratified_bootstrap: no strata");
  std::vector<double> pooled;
  for (const auto& [name, scores] : strata) {
    if (scores.empty()) throw std::invalid_argument("stratified_bootstrap: empty stratum '" + name + "'");
    pooled.insert(pooled.end(), scores.begin(), scores.end());
  }
  if (n_bootstrap < 1) throw std::invalid_argument("stratified_bootstrap: need at least one replicate");

  Rng rng(seed);
  std::vector<double> reps(n_bootstrap), sample(pooled.size());
  for (std::size_t b = 0; b < n_bootstrap; ++b) {
    std::size_t k = 0;
    for (const auto& [name, scores] : strata) {
      const auto n = scores.size();
      for (std::size_t i = 0; i < n; ++i) {
        auto idx = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
        sample[k++] = scores[std::min(idx, n - 1)];
      }
    }
    reps[b] = compute(metric, sample);
  }
  const double tail = 50.0 * (1.0 - confidence);
  Interval out;
  out.point = compute(metric, pooled);
  out.lower = percentile(reps, tail);
  out.upper = percentile(reps, 100.0 - tail);
  // Percentiles of a finite replicate set can miss the point estimate by
  // rounding; keep lower <= point <= upper.
  out.lower = std::min(out.lower, out.point);
  out.upper = std::max(out.upper, out.point);
  return out;
}

}  // namespace wsts::stats
