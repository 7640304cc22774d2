#pragma once

// Randomized property checks shared by the unit tests (fewer cases) and the
// acceptance binary (1000 cases each). Every check is seeded and returns the
// first counterexample it finds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "hacache/hacache.hpp"

namespace hacache::props {

struct Outcome {
  bool ok = true;
  std::size_t cases = 0;
  std::string failure;

  void fail(const std::string& why) {
    if (ok) failure = "case " + std::to_string(cases) + ": " + why;
    ok = false;
  }
};

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double real(double lo, double hi) { return lo + (hi - lo) * sim::uniform01(rng_); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(sim::uniform_index(rng_, n)); }
  bool coin(double p = 0.5) { return sim::uniform01(rng_) < p; }
  std::uint64_t u64() { return rng_(); }
  std::vector<double> reals(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = real(lo, hi);
    return v;
  }
  sim::Rng& rng() { return rng_; }

 private:
  sim::Rng rng_;
};

inline std::string show(const std::vector<double>& v) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << ')';
  return os.str();
}

inline bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

// ------------------------------------------------------------ model-core

/// b_i + c_i = T, cache and backend caps respected, S = N T.
inline Outcome steady_state_invariants(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const std::size_t n = 1 + g.index(8);
    auto rho = g.reals(n, 0.0, 1.0);
    if (g.coin(0.1)) rho[g.index(n)] = 0.0;
    if (g.coin(0.05)) rho[g.index(n)] = 1.0;
    const auto b_max = g.reals(n, 0.1, 10000.0);
    const double c_max = g.coin(0.1) ? 0.0 : g.real(0.0, 20000.0);
    const auto ss = steady_state_solve(rho, b_max, c_max);
    if (!(std::isfinite(ss.T) && ss.T >= 0.0)) {
      out.fail("T not finite for rho=" + show(rho));
      break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!close_rel(ss.b[i] + ss.c[i], ss.T, 1e-9)) out.fail("b+c != T");
      if (ss.b[i] < -1e-12 || ss.b[i] > b_max[i] * (1 + 1e-9)) out.fail("b outside [0, b_max]");
    }
    if (ss.cache_total() > c_max * (1 + 1e-9) + 1e-12) out.fail("cache over budget");
    if (!close_rel(ss.S, static_cast<double>(n) * ss.T, 1e-12)) out.fail("S != N T");
  }
  return out;
}

/// Raising one rho_i while the cache term does not bind never lowers T.
inline Outcome steady_state_monotone(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const std::size_t n = 2 + g.index(6);
    auto rho = g.reals(n, 0.0, 0.95);
    const auto b_max = g.reals(n, 1.0, 10.0);
    const double c_max = 1e9;  // cache never binds
    const auto before = steady_state_solve(rho, b_max, c_max);
    const std::size_t i = g.index(n);
    rho[i] = g.real(rho[i], 0.99);
    const auto after = steady_state_solve(rho, b_max, c_max);
    if (after.T < before.T * (1 - 1e-12)) out.fail("T fell from " + std::to_string(before.T));
  }
  return out;
}

inline Outcome steady_state_homogeneous(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const std::size_t n = 1 + g.index(8);
    const double b = g.real(0.1, 10000.0);
    const std::vector<double> rho(n, 0.0), b_max(n, b);
    const auto ss = steady_state_solve(rho, b_max, g.real(0.0, 1e4));
    if (ss.T != b) out.fail("T != b_max for homogeneous zero diversion");
  }
  return out;
}

/// Largest T on a 0.01 grid satisfying the constraints matches the closed form.
inline Outcome steady_state_grid(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  constexpr double step = 0.01;
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const std::size_t n = 1 + g.index(3);
    const auto rho = g.reals(n, 0.0, 0.9);
    const auto b_max = g.reals(n, 1.0, 10.0);
    const double c_max = g.real(0.0, 20.0);
    const double rho_sum = std::accumulate(rho.begin(), rho.end(), 0.0);
    double best = 0.0;
    for (std::size_t m = 0;; ++m) {
      const double t = static_cast<double>(m) * step;
      bool ok = rho_sum * t <= c_max + 1e-12;
      for (std::size_t i = 0; i < n && ok; ++i) ok = (1 - rho[i]) * t <= b_max[i] + 1e-12;
      if (!ok) break;
      best = t;
    }
    const double T = steady_state_solve(rho, b_max, c_max).T;
    if (!(best <= T + 1e-9 && T - best <= step + 1e-9)) {
      out.fail("grid " + std::to_string(best) + " vs solve " + std::to_string(T));
    }
  }
  return out;
}

// ------------------------------------------------------------ planner

inline Outcome planner_oracle(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const std::size_t n = 1 + g.index(4);
    const auto b_max = g.reals(n, 1.0, 10.0);
    const double sum = std::accumulate(b_max.begin(), b_max.end(), 0.0);
    const double c_max = g.coin(0.05) ? 0.0 : g.real(0.0, 2.0 * sum);
    const auto plan = plan_optimal(b_max, c_max);
    const auto bf = brute_force_plan(b_max, c_max);
    const double tol = static_cast<double>(n) * plan.t_star * 0.01;
    if (std::abs(plan.aggregate() - bf.aggregate()) > tol) {
      out.fail("b_max=" + show(b_max) + " c=" + std::to_string(c_max) + " plan S=" +
               std::to_string(plan.aggregate()) + " brute S=" + std::to_string(bf.aggregate()));
    }
    if (n <= 2) {
      // Nothing on the N-D grid beats the plan.
      BruteForceOptions full;
      full.mode = BruteForceMode::full_grid;
      const auto grid = brute_force_plan(b_max, c_max, full);
      if (grid.aggregate() > plan.aggregate() * (1 + 1e-9)) out.fail("full grid beats the plan");
    }
  }
  return out;
}

/// Any level above T* needs more cache than there is.
inline Outcome planner_water_level(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const std::size_t n = 1 + g.index(6);
    const auto b_max = g.reals(n, 1.0, 10.0);
    const double c_max = g.coin(0.1) ? 0.0 : g.real(0.0, 40.0);
    const auto plan = plan_optimal(b_max, c_max);
    const double higher = plan.t_star * (1 + 1e-6);
    double need = 0.0;
    for (double b : b_max) need += std::max(0.0, higher - b);
    if (!(need > c_max)) out.fail("level above T* still feasible");
    for (std::size_t i = 0; i < n; ++i) {
      if (b_max[i] >= plan.t_star && plan.rho[i] != 0.0) out.fail("drive above T* diverted");
    }
  }
  return out;
}

/// With any cache at all, the plan spends all of it.
inline Outcome planner_cache_exhaustion(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const std::size_t n = 1 + g.index(6);
    const auto b_max = g.reals(n, 1.0, 10.0);
    const double c_max = g.real(1e-6, 40.0);
    const auto plan = plan_optimal(b_max, c_max);
    if (!close_rel(plan.cache_used(), c_max, 1e-9)) {
      out.fail("cache used " + std::to_string(plan.cache_used()) + " of " + std::to_string(c_max));
    }
  }
  return out;
}

inline Outcome planner_permutation(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const std::size_t n = 1 + g.index(6);
    auto b_max = g.reals(n, 1.0, 10.0);
    if (n > 1 && g.coin(0.3)) b_max[1] = b_max[0];  // exercise ties
    const double c_max = g.real(0.0, 40.0);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[g.index(i)]);
    std::vector<double> shuffled(n);
    for (std::size_t i = 0; i < n; ++i) shuffled[i] = b_max[perm[i]];
    const auto a = plan_optimal(b_max, c_max);
    const auto b = plan_optimal(shuffled, c_max);
    if (!close_rel(a.t_star, b.t_star, 1e-12)) out.fail("T* changed under permutation");
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(b.rho[i] - a.rho[perm[i]]) > 1e-12) out.fail("rho not permuted");
    }
  }
  return out;
}

// ------------------------------------------------------------ controller

inline Outcome valve_clamping(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const double T = g.coin(0.1) ? 1e-300 : std::exp(g.real(-20.0, 20.0));
    const double b = g.coin(0.1) ? 0.0 : std::exp(g.real(-20.0, 20.0));
    const double h = g.coin(0.1) ? (g.coin() ? 0.0 : 1.0) : g.real(0.0, 1.0);
    const double p = estimate_valve(T, b, h);
    if (!(p >= 0.0 && p <= 1.0)) out.fail("valve " + std::to_string(p) + " outside [0,1]");
  }
  return out;
}

struct ControlCase {
  std::vector<double> b_max;
  double c_max = 0.0;
  std::vector<double> h;
  std::vector<double> p0;
};

inline ControlCase random_control_case(Gen& g, bool unit_hits) {
  ControlCase c;
  c.b_max = g.reals(4, 1.0, 10.0);
  c.c_max = g.real(0.0, 20.0);
  c.h = unit_hits ? std::vector<double>(4, 1.0) : g.reals(4, 0.3, 1.0);
  c.p0 = g.reals(4, 0.0, 1.0);
  return c;
}

/// Controller parameters scaled to instances with b_max in [1, 10].
inline ControllerParams small_params() {
  ControllerParams p;
  p.delta_b = 1.0;
  p.delta_c = 0.4;
  return p;
}

/// Committed S never drops within a phase sweep on the analytic model.
inline Outcome rollback_safety(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const auto c = random_control_case(g, false);
    AnalyticEnv env(c.b_max, c.c_max, HitProfile(c.h));
    Controller ctl(env, small_params(), ValveConfig(c.p0));
    ctl.run_two_phase(2000);
    const auto& log = ctl.commits();
    for (std::size_t k = 1; k < log.size(); ++k) {
      if (log[k].sweep == log[k - 1].sweep && log[k].S < log[k - 1].S * (1 - 1e-9)) {
        out.fail("S dropped from " + std::to_string(log[k - 1].S) + " to " + std::to_string(log[k].S) +
                 " in " + std::string(to_string(log[k].phase)));
        break;
      }
    }
  }
  return out;
}

/// With h = 1 the two-phase search ends with its level S/N within max(delta_b, delta_c) of T*.
inline Outcome fixpoint_optimality(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  const auto params = small_params();
  const double tol = 4 * std::max(params.delta_b, *params.delta_c);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const auto c = random_control_case(g, true);
    AnalyticEnv env(c.b_max, c.c_max, HitProfile(c.h));
    Controller ctl(env, params, ValveConfig(c.p0));
    const auto rep = ctl.run_two_phase(5000);
    env.apply(ctl.state().P);
    const double S = env.measure().system;
    const double best = plan_optimal(c.b_max, c.c_max).aggregate();
    if (!rep.converged) out.fail("no convergence for b_max=" + show(c.b_max));
    else if (S < best - tol) {
      out.fail("S=" + std::to_string(S) + " vs N T*=" + std::to_string(best) + " b_max=" + show(c.b_max) +
               " c=" + std::to_string(c.c_max) + " p0=" + show(c.p0));
    }
  }
  return out;
}

/// Every valve the controller applies keeps rho_i = h_i p_i within h_i.
inline Outcome hit_rate_cap(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const auto c = random_control_case(g, false);
    AnalyticEnv env(c.b_max, c.c_max, HitProfile(c.h));
    Controller ctl(env, small_params(), ValveConfig(c.p0));
    ctl.run_two_phase(500);
    for (const auto& row : ctl.trace()) {
      for (std::size_t i = 0; i < row.p.size(); ++i) {
        if (!(row.p[i] >= 0.0 && row.p[i] <= 1.0) || c.h[i] * row.p[i] > c.h[i]) {
          out.fail("valve outside [0,1]");
        }
      }
    }
  }
  return out;
}

/// A drive that received shards never gives any back, in the same epoch or later.
inline Outcome anti_oscillation(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const auto b_max = g.reals(4, 1.0, 10.0);
    const double c_max = g.real(0.5, 20.0);
    auto env = AnalyticEnv::with_uniform_cache(b_max, c_max, g.real(0.02, 0.6), 64);
    auto params = small_params();
    params.shard_count = 64;
    params.delta_q = 1 + g.index(8);
    Controller ctl(env, params);
    const auto rep = ctl.run(20000);
    std::vector<bool> received(4, false);
    for (const auto& o : rep.outcomes) {
      std::vector<bool> now(4, false);
      for (const auto& m : o.moves) now[static_cast<std::size_t>(m.to)] = true;
      for (std::size_t d : o.donors) {
        if (now[d] || received[d]) out.fail("drive " + std::to_string(d) + " both received and lost shards");
      }
      for (std::size_t i = 0; i < 4; ++i) received[i] = received[i] || now[i];
    }
  }
  return out;
}

inline double nhc_at_zero(const std::vector<double>& b_max, double c_max, const std::vector<double>& h) {
  AnalyticEnv env(b_max, c_max, HitProfile(h));
  env.apply(ValveConfig::uniform(b_max.size(), 0.0));
  return env.measure().system;
}

inline Outcome nhc_dominates_idle(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const auto c = random_control_case(g, false);
    AnalyticEnv env(c.b_max, c.c_max, HitProfile(c.h));
    NhcOptions opt;
    opt.step = g.real(0.01, 0.5);
    const auto r = nhc_optimize(env, opt);
    if (r.S < nhc_at_zero(c.b_max, c.c_max, c.h) * (1 - 1e-12)) out.fail("NHC below p = 0");
  }
  return out;
}

inline double hacache_analytic(const std::vector<double>& b_max, double c_max, const std::vector<double>& h,
                               const ControllerParams& params, const ValveConfig& p0) {
  AnalyticEnv env(b_max, c_max, HitProfile(h));
  Controller ctl(env, params, p0);
  ctl.run_two_phase(10000);
  env.apply(ctl.state().P);
  return env.measure().system;
}

inline double nhc_analytic(const std::vector<double>& b_max, double c_max, const std::vector<double>& h) {
  AnalyticEnv env(b_max, c_max, HitProfile(h));
  return nhc_optimize(env).S;
}

/// Converged HACache S is at least NHC's: strictly on every heterogeneous
/// preset, within one controller step on random instances.
inline Outcome hacache_beats_nhc(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  const ControllerParams preset_params;
  for (const auto& name : preset_names()) {
    for (std::uint32_t bs : {devices::k4K, devices::k128K}) {
      const auto arr = preset_topology(name);
      const auto b_max = arr.backend_bandwidth(bs);
      const double c_max = arr.cache_bandwidth(bs);
      const std::vector<double> h(4, 1.0);
      const double ha = hacache_analytic(b_max, c_max, h, preset_params, ValveConfig::uniform(4, 1.0));
      const double nhc = nhc_analytic(b_max, c_max, h);
      if (!is_homogeneous(b_max) && !(ha > nhc)) out.fail(name + ": HACache " + std::to_string(ha) + " <= NHC");
      if (is_homogeneous(b_max) && ha < nhc - std::max(preset_params.delta_b, preset_params.cache_step(4))) {
        out.fail(name + ": HACache well below NHC on a homogeneous array");
      }
    }
  }
  const auto params = small_params();
  const double tol = std::max(params.delta_b, *params.delta_c);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const auto c = random_control_case(g, true);
    const double ha = hacache_analytic(c.b_max, c.c_max, c.h, params, ValveConfig(c.p0));
    const double nhc = nhc_analytic(c.b_max, c.c_max, c.h);
    if (ha < nhc - tol) out.fail("HACache " + std::to_string(ha) + " < NHC " + std::to_string(nhc));
  }
  return out;
}

// ------------------------------------------------------------ simkit

inline sim::SimConfig small_sim(Gen& g, std::uint32_t block_size = devices::k128K) {
  sim::SimConfig c;
  const auto& names = preset_names();
  c.topology = preset_topology(names[g.index(names.size())]);
  c.workload.block_size = block_size;
  c.workload.io_range = std::uint64_t{block_size} * (4096 + g.index(8192));
  c.workload.pattern = g.coin() ? sim::Pattern::hotspot : sim::Pattern::uniform_random;
  c.workload.threads = static_cast<std::uint32_t>(1 + g.index(16));
  c.workload.queue_depth = static_cast<std::uint32_t>(1 + g.index(64));
  c.workload.seed = g.u64();
  c.cache_frac = g.coin(0.2) ? 0.0 : g.real(0.01, 0.5);
  c.shard_count = 16 + g.index(240);
  return c;
}

inline Outcome sim_determinism(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const auto cfg = small_sim(g);
    const auto p = ValveConfig(g.reals(cfg.topology.drive_count(), 0.0, 1.0));
    auto trace = [&] {
      sim::SimEnv env(cfg, 0.002, 0.001);
      env.apply(p);
      std::vector<Telemetry> ts;
      for (int k = 0; k < 3; ++k) ts.push_back(env.measure());
      return ts;
    };
    const auto a = trace();
    const auto b = trace();
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k].backend != b[k].backend || a[k].logical != b[k].logical || a[k].hit_rate != b[k].hit_rate ||
          a[k].shard_hits != b[k].shard_hits) {
        out.fail("telemetry differs between identical runs");
      }
    }
  }
  return out;
}

/// Every generated request completes exactly once, from cache or backend.
inline Outcome sim_conservation(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    auto cfg = small_sim(g);
    const std::uint64_t limit = 1 + g.index(20000);
    cfg.workload.request_limit = limit;
    sim::Simulator s(cfg);
    s.set_valves(ValveConfig(g.reals(cfg.topology.drive_count(), 0.0, 1.0)));
    std::uint64_t served = 0;
    for (int k = 0; k < 1000 && s.outstanding() + (s.generated() < limit) > 0; ++k) {
      const auto sample = s.measure_cycle(0.01);
      if (sample.total_bytes() != sample.completed * cfg.workload.block_size) out.fail("bytes != completions");
      served += sample.completed;
    }
    if (s.generated() != limit || s.completed() != limit || served != limit) {
      out.fail("generated " + std::to_string(s.generated()) + ", completed " + std::to_string(s.completed()) +
               ", limit " + std::to_string(limit));
    }
  }
  return out;
}

/// Arrival share per drive is 1/N within one percentage point.
inline Outcome striping_uniformity(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const std::size_t n = 2 + g.index(7);
    sim::WorkloadSpec w;
    w.block_size = g.coin() ? devices::k4K : devices::k128K;
    w.io_range = std::uint64_t{w.block_size} * (8192 + g.index(8192));
    w.pattern = g.coin() ? sim::Pattern::hotspot : sim::Pattern::uniform_random;
    w.seed = g.u64();
    const sim::StripeMap map(n, 128 * 1024, w.block_size, w.block_count());
    const sim::BlockStream base(w, n, [&](std::uint64_t b) { return map.drive_of(b); });
    sim::BlockStream stream = base;
    sim::Rng rng(w.seed);
    std::vector<std::uint64_t> count(n, 0);
    constexpr std::uint64_t draws = 100000;
    for (std::uint64_t k = 0; k < draws; ++k) ++count[map.drive_of(stream.next(rng))];
    for (std::size_t i = 0; i < n; ++i) {
      const double share = static_cast<double>(count[i]) / draws;
      if (std::abs(share - 1.0 / static_cast<double>(n)) > 0.01) {
        out.fail("drive " + std::to_string(i) + " share " + std::to_string(share) + " with N=" + std::to_string(n));
      }
    }
  }
  return out;
}

/// 3A-1B without cache: the fast drive holds under 10% of queued requests
/// and the slow drives the rest. How the slow drives split it wanders from
/// window to window.
inline Outcome queue_blocking(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    sim::SimConfig cfg;
    cfg.topology = preset_topology("3A-1B");
    cfg.workload.block_size = g.coin() ? devices::k4K : devices::k128K;
    cfg.workload.io_range = std::uint64_t{cfg.workload.block_size} * 65536;
    cfg.workload.pattern = g.coin() ? sim::Pattern::hotspot : sim::Pattern::uniform_random;
    cfg.workload.seed = g.u64();
    cfg.cache_frac = 0.0;
    sim::Simulator s(cfg);
    const double window = cfg.workload.block_size == devices::k4K ? 0.004 : 0.05;
    s.measure_cycle(window);
    const auto share = s.measure_cycle(window).queue_share();
    if (!(share[3] < 0.10 && share[0] + share[1] + share[2] > 0.90)) {
      out.fail("queue shares " + show(share));
    }
  }
  return out;
}

/// Fixed valves and the measured hit rates put through the analytic model
/// predict the simulator's per-drive backend bandwidth and S within 5%.
inline Outcome model_agreement(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    sim::SimConfig cfg;
    const auto& names = preset_names();
    cfg.topology = preset_topology(names[g.index(names.size())]);
    cfg.workload.block_size = devices::k128K;
    cfg.workload.io_range = std::uint64_t{devices::k128K} * 16384;
    cfg.workload.pattern = sim::Pattern::uniform_random;
    cfg.workload.seed = g.u64();
    cfg.cache_frac = g.coin(0.1) ? 0.0 : g.real(0.05, 0.9);
    const std::size_t n = cfg.topology.drive_count();
    const auto p = ValveConfig(g.reals(n, 0.0, 1.0));
    sim::SimEnv env(cfg, 0.5);
    env.apply(p);
    for (int k = 0; k < 2; ++k) env.measure();
    const Telemetry t = env.measure();
    const auto rho = effective_diversion(p, HitProfile(t.hit_rate));
    const auto bs = cfg.workload.block_size;
    const auto ss = steady_state_solve(rho, cfg.topology.backend_bandwidth(bs), cfg.topology.cache_bandwidth(bs));
    if (std::abs(t.system - ss.S) > 0.05 * ss.S) {
      out.fail("S sim " + std::to_string(t.system) + " vs model " + std::to_string(ss.S) + " p=" +
               show(std::vector<double>(p.values().begin(), p.values().end())));
    }
    for (std::size_t i = 0; i < n && out.ok; ++i) {
      if (std::abs(t.backend[i] - ss.b[i]) > 0.05 * ss.T) {
        out.fail("drive " + std::to_string(i) + " b sim " + std::to_string(t.backend[i]) + " vs model " +
                 std::to_string(ss.b[i]) + " cache_frac=" + std::to_string(cfg.cache_frac) +
                 " p=" + show(std::vector<double>(p.values().begin(), p.values().end())) + " h=" + show(t.hit_rate));
      }
    }
  }
  return out;
}

// ------------------------------------------------------------ bench-cli

inline ScenarioConfig random_config(Gen& g) {
  ScenarioConfig c;
  const auto& names = preset_names();
  c.topology = g.coin(0.8) ? names[g.index(names.size())] : std::string(g.coin() ? "A,B,B" : "B,A,A,B,A");
  c.cache_device = g.coin(0.8) ? "C" : "B";
  c.block_size = g.coin() ? devices::k4K : devices::k128K;
  c.io_range = std::uint64_t{c.block_size} * (1 + g.index(1u << 20));
  c.pattern = static_cast<sim::Pattern>(g.index(3));
  c.hot_space_frac = g.real(0.001, 0.999);
  c.hot_access_frac = g.real(0.001, 0.999);
  c.cache_frac = g.real(0.0, 1.0);
  if (g.coin(0.3)) c.cache_bytes = g.u64() >> 20;
  c.seed = g.u64();
  c.max_cycles = 1 + g.index(100000);
  c.delta_b = g.real(1.0, 5000.0);
  if (g.coin()) c.delta_c = g.real(1.0, 5000.0);
  c.p_thres = g.real(0.01, 0.99);
  c.shard_count = 1 + g.index(4096);
  c.delta_q = 1 + g.index(c.shard_count);
  c.noise_bound = g.real(1e-4, 0.1);
  c.hit_stable_cycles = 1 + g.index(10);
  c.decision_tolerance = g.real(0.0, 0.1);
  c.valve_tolerance = g.real(0.0, 0.1);
  c.nhc_step = g.real(0.001, 0.5);
  c.window_ms = g.real(1.0, 1000.0);
  c.settle_ms = g.real(0.0, 100.0);
  c.threads = static_cast<std::uint32_t>(1 + g.index(64));
  c.qd = static_cast<std::uint32_t>(1 + g.index(256));
  c.regulation = g.coin();
  c.controller = g.coin() ? ControllerKind::hacache : ControllerKind::nhc;
  c.hit_rate = g.real(0.0, 1.0);
  c.report_cycles = g.index(50);
  return c;
}

inline Outcome config_round_trip(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    const auto c = random_config(g);
    const auto text = serialize_config(c);
    const auto back = parse_config(text);
    if (!(back == c)) out.fail("round trip changed the config:\n" + text);
    if (serialize_config(back) != text) out.fail("serialization not stable");
  }
  return out;
}

inline std::string run_csv(const ScenarioConfig& cfg) {
  const auto res = cmd_run(cfg);
  std::ostringstream os;
  write_trace_csv(os, res.trace, res.drives);
  os << run_summary_row(res.summary) << '\n';
  return os.str();
}

/// Same config and seed, same CSV bytes.
inline Outcome csv_determinism(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  Gen g(seed);
  for (out.cases = 0; out.cases < cases && out.ok; ++out.cases) {
    ScenarioConfig c;
    const auto& names = preset_names();
    c.topology = names[g.index(names.size())];
    c.io_range = std::uint64_t{c.block_size} * 8192;
    c.pattern = g.coin() ? sim::Pattern::hotspot : sim::Pattern::uniform_random;
    c.cache_frac = g.real(0.0, 0.5);
    c.seed = g.u64();
    c.window_ms = 2.0;
    c.settle_ms = 0.5;
    c.max_cycles = 40;
    c.report_cycles = 2;
    c.controller = g.coin(0.7) ? ControllerKind::hacache : ControllerKind::nhc;
    if (run_csv(c) != run_csv(c)) out.fail("CSV differs for seed " + std::to_string(c.seed));
  }
  return out;
}

struct NamedProperty {
  const char* name;
  Outcome (*check)(std::size_t, std::uint64_t);
};

inline const std::vector<NamedProperty>& all_properties() {
  static const std::vector<NamedProperty> all{
      {"steady_state_invariants", steady_state_invariants},
      {"steady_state_monotone", steady_state_monotone},
      {"steady_state_homogeneous", steady_state_homogeneous},
      {"steady_state_grid", steady_state_grid},
      {"planner_oracle", planner_oracle},
      {"planner_water_level", planner_water_level},
      {"planner_cache_exhaustion", planner_cache_exhaustion},
      {"planner_permutation", planner_permutation},
      {"valve_clamping", valve_clamping},
      {"rollback_safety", rollback_safety},
      {"fixpoint_optimality", fixpoint_optimality},
      {"hit_rate_cap", hit_rate_cap},
      {"anti_oscillation", anti_oscillation},
      {"nhc_dominates_idle", nhc_dominates_idle},
      {"hacache_beats_nhc", hacache_beats_nhc},
      {"sim_determinism", sim_determinism},
      {"sim_conservation", sim_conservation},
      {"striping_uniformity", striping_uniformity},
      {"queue_blocking", queue_blocking},
      {"model_agreement", model_agreement},
      {"config_round_trip", config_round_trip},
      {"csv_determinism", csv_determinism},
  };
  return all;
}

}  // namespace hacache::props
