#pragma once

// Mean-variance utility maximization over the probability simplex with a
// diagonal covariance:
//
//   max_w  w.mu - (delta / 2) * sum_j w_j^2 sigma2_j   s.t.  w >= 0, sum w = 1
//
// For delta > 0 the KKT conditions give w_j = max(0, (mu_j - lambda) / (delta s_j))
// with s_j = max(sigma2_j, floor); lambda is located exactly by walking the
// sorted breakpoints. delta = 0 is the linear program: all weight on argmax mu.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace wsts {

struct PortfolioProblem {
  std::vector<double> mu;
  std::vector<double> sigma2;
  double delta{1.0};
  double variance_floor{1e-8};
};

struct WeightVector {
  std::vector<double> w;

  [[nodiscard]] std::size_t size() const noexcept { return w.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return w[i]; }
};

namespace detail {

inline void validate(const PortfolioProblem& p) {
  if (p.mu.empty()) throw std::invalid_argument("portfolio: empty problem");
  if (p.mu.size() != p.sigma2.size()) throw std::invalid_argument("portfolio: mu/sigma2 length mismatch");
  if (!std::isfinite(p.delta) || p.delta < 0.0) throw std::invalid_argument("portfolio: delta must be finite and >= 0");
  if (!std::isfinite(p.variance_floor) || !(p.variance_floor > 0.0))
    throw std::invalid_argument("portfolio: variance floor must be > 0");
  for (std::size_t j = 0; j < p.mu.size(); ++j) {
    if (!std::isfinite(p.mu[j]) || !std::isfinite(p.sigma2[j]))
      throw std::invalid_argument("portfolio: non-finite input");
    if (p.sigma2[j] < 0.0) throw std::invalid_argument("portfolio: negative variance");
  }
}

inline double floored(const PortfolioProblem& p, std::size_t j) {
  return std::max(p.sigma2[j], p.variance_floor);
}

}  // namespace detail

/// Objective value of `w` (variances floored as in the solver).
inline double portfolio_objective(const PortfolioProblem& p, std::span<const double> w) {
  double ret = 0.0, risk = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    ret += w[j] * p.mu[j];
    risk += w[j] * w[j] * detail::floored(p, j);
  }
  return ret - 0.5 * p.delta * risk;
}

inline WeightVector solve_mean_variance(const PortfolioProblem& p) {
  detail::validate(p);
  const std::size_t n = p.mu.size();
  WeightVector out{std::vector<double>(n, 0.0)};
  if (n == 1) {
    out.w[0] = 1.0;
    return out;
  }

  if (p.delta == 0.0) {
    const double best = *std::max_element(p.mu.begin(), p.mu.end());
    const auto ties = static_cast<double>(std::count(p.mu.begin(), p.mu.end(), best));
    for (std::size_t j = 0; j < n; ++j)
      if (p.mu[j] == best) out.w[j] = 1.0 / ties;
    return out;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p.mu[a] > p.mu[b]; });

  // Total weight the top-m assets would carry at lambda = next breakpoint.
  // The first m whose fill reaches 1 fixes the active set.
  double sum_inv = 0.0, sum_mu_inv = 0.0;
  std::size_t m = 0;
  while (m < n) {
    const std::size_t j = order[m];
    sum_inv += 1.0 / detail::floored(p, j);
    sum_mu_inv += p.mu[j] / detail::floored(p, j);
    ++m;
    if (m == n) break;
    const double next = p.mu[order[m]];
    const double fill = (sum_mu_inv - next * sum_inv) / p.delta;
    if (fill >= 1.0) break;
  }
  const double lambda = (sum_mu_inv - p.delta) / sum_inv;

  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = order[i];
    const double wj = std::max(0.0, (p.mu[j] - lambda) / (p.delta * detail::floored(p, j)));
    out.w[j] = wj;
    total += wj;
  }
  if (!(total > 0.0)) throw std::runtime_error("solve_mean_variance: degenerate solution");
  for (auto& wj : out.w) wj /= total;
  return out;
}

/// Exhaustive search over the simplex grid {k / n : sum k = n}, n = round(1/resolution).
inline WeightVector brute_force_simplex_oracle(const PortfolioProblem& p, double resolution) {
  detail::validate(p);
  const std::size_t dim = p.mu.size();
  if (dim > 5) throw std::invalid_argument("brute_force_simplex_oracle: at most 5 assets");
  if (!(resolution > 0.0 && resolution < 1.0))
    throw std::invalid_argument("brute_force_simplex_oracle: resolution must lie in (0, 1)");
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / resolution));

  // C(steps + dim - 1, dim - 1) grid points.
  double points = 1.0;
  for (std::size_t i = 1; i < dim; ++i)
    points = points * static_cast<double>(steps + i) / static_cast<double>(i);
  if (points > 1e7) throw std::invalid_argument("brute_force_simplex_oracle: grid exceeds 1e7 points");

  std::vector<std::size_t> k(dim, 0);
  std::vector<double> w(dim, 0.0);
  WeightVector best{std::vector<double>(dim, 0.0)};
  double best_val = -std::numeric_limits<double>::infinity();

  auto recurse = [&](auto&& self, std::size_t idx, std::size_t remaining) -> void {
    if (idx + 1 == dim) {
      k[idx] = remaining;
      for (std::size_t j = 0; j < dim; ++j) w[j] = static_cast<double>(k[j]) / static_cast<double>(steps);
      const double v = portfolio_objective(p, w);
      if (v > best_val) {
        best_val = v;
        best.w = w;
      }
      return;
    }
    for (std::size_t c = 0; c <= remaining; ++c) {
      k[idx] = c;
      self(self, idx + 1, remaining - c);
    }
  };
  recurse(recurse, 0, steps);
  return best;
}

}  // namespace wsts
