#pragma once

// Optimal diversion-ratio planning by water-filling, plus a brute-force
// search used to certify it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "hacache/error.hpp"
#include "hacache/model.hpp"

namespace hacache {

struct DiversionPlan {
  std::vector<double> rho;     ///< per drive, in the caller's drive order
  double t_star = 0.0;         ///< optimal logical level per drive (MB/s)
  std::size_t k_covered = 0;   ///< drives receiving cache bandwidth

  double aggregate() const { return static_cast<double>(rho.size()) * t_star; }
  double cache_used() const {
    return std::accumulate(rho.begin(), rho.end(), 0.0) * t_star;
  }
};

/// Water-fill the cache bandwidth over the slowest drives.
///
/// Drives are visited in ascending peak order (stable, so equal peaks keep
/// their input order). Covering the k slowest drives gives level
/// (c_max + sum of their peaks) / k; the first k whose level does not exceed
/// the next drive's peak fixes T*.
inline DiversionPlan plan_optimal(std::span<const double> b_max, double c_max) {
  if (b_max.empty()) throw DomainError("plan_optimal: no backend drives");
  if (!(c_max >= 0.0)) throw DomainError("plan_optimal: cache bandwidth must be >= 0");
  for (double b : b_max) {
    if (!(b > 0.0)) throw DomainError("plan_optimal: backend bandwidth must be > 0");
  }

  const std::size_t n = b_max.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return b_max[x] < b_max[y]; });

  DiversionPlan plan;
  double sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    sum += b_max[order[k - 1]];
    const double level = (c_max + sum) / static_cast<double>(k);
    if (k == n || level <= b_max[order[k]]) {
      plan.t_star = level;
      break;
    }
  }

  plan.rho.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    plan.rho[i] = std::max(0.0, 1.0 - b_max[i] / plan.t_star);
  }
  // Drives sitting exactly at T* were covered by the fill but need no cache.
  plan.k_covered = static_cast<std::size_t>(
      std::count_if(plan.rho.begin(), plan.rho.end(), [](double r) { return r > 0.0; }));
  return plan;
}

enum class BruteForceMode {
  level_grid,  ///< 1-D: enumerate T on a geometric grid, derive rho from T
  full_grid,   ///< N-D: enumerate every rho vector on a uniform grid
};

struct BruteForceOptions {
  double grid_step = 0.01;
  BruteForceMode mode = BruteForceMode::level_grid;
  double max_points = 2.0e7;
};

/// Exhaustive search for the rho vector maximizing aggregate bandwidth.
///
/// level_grid visits T = T_lo (1 + step)^m between the slowest peak and the
/// unconstrained ceiling, so the best grid point is within a factor
/// (1 + step) of the optimum. full_grid visits rho in {0, step, ..} ^ N and
/// evaluates each through steady_state_solve. Ties go to the smaller sum of
/// rho.
inline DiversionPlan brute_force_plan(std::span<const double> b_max, double c_max,
                                      const BruteForceOptions& opt = {}) {
  if (b_max.empty()) throw DomainError("brute_force_plan: no backend drives");
  if (!(opt.grid_step > 0.0 && opt.grid_step <= 0.1)) {
    throw DomainError("brute_force_plan: grid step must be in (0, 0.1]");
  }
  if (!(c_max >= 0.0)) throw DomainError("brute_force_plan: cache bandwidth must be >= 0");
  const std::size_t n = b_max.size();

  DiversionPlan best;
  double best_sum = 0.0;
  bool have = false;
  auto consider = [&](const std::vector<double>& rho, double level) {
    const double s = static_cast<double>(n) * level;
    const double rho_sum = std::accumulate(rho.begin(), rho.end(), 0.0);
    const double cur = best.aggregate();
    const double eps = 1e-12 * std::max(1.0, std::abs(cur));
    if (!have || s > cur + eps || (std::abs(s - cur) <= eps && rho_sum < best_sum)) {
      best.rho = rho;
      best.t_star = level;
      best_sum = rho_sum;
      have = true;
    }
  };

  if (opt.mode == BruteForceMode::level_grid) {
    const double lo = *std::min_element(b_max.begin(), b_max.end());
    const double hi = aggregate_bound(b_max, c_max) / static_cast<double>(n);
    const double points = std::log(hi / lo) / std::log1p(opt.grid_step) + 2.0;
    if (points > opt.max_points) throw SizeError("brute_force_plan: level grid too large");
    std::vector<double> rho(n);
    for (std::size_t m = 0;; ++m) {
      const double level = lo * std::pow(1.0 + opt.grid_step, static_cast<double>(m));
      if (level > hi * (1.0 + 1e-12)) break;
      double need = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        rho[i] = std::max(0.0, 1.0 - b_max[i] / level);
        need += rho[i] * level;
      }
      if (need > c_max * (1.0 + 1e-12) + 1e-300) continue;
      consider(rho, steady_state_solve(rho, b_max, c_max).T);
    }
  } else {
    const auto steps = static_cast<std::size_t>(std::floor(1.0 / opt.grid_step + 1e-9));
    if (std::pow(static_cast<double>(steps), static_cast<double>(n)) > opt.max_points) {
      throw SizeError("brute_force_plan: full grid of " + std::to_string(steps) + "^" +
                      std::to_string(n) + " points exceeds the cap");
    }
    // rho in {0, step, ..., (steps-1) step}; rho = 1 is excluded.
    std::vector<std::size_t> idx(n, 0);
    std::vector<double> rho(n, 0.0);
    for (;;) {
      for (std::size_t i = 0; i < n; ++i) rho[i] = static_cast<double>(idx[i]) * opt.grid_step;
      consider(rho, steady_state_solve(rho, b_max, c_max).T);
      std::size_t d = 0;
      while (d < n && ++idx[d] == steps) idx[d++] = 0;
      if (d == n) break;
    }
  }

  best.k_covered = static_cast<std::size_t>(
      std::count_if(best.rho.begin(), best.rho.end(), [](double r) { return r > 0.0; }));
  return best;
}

}  // namespace hacache
