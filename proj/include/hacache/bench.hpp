#pragma once

// Experiment commands behind the benchmark CLI. Each returns a plain result
// struct and has a matching CSV writer; the CLI only does argument handling
// and output routing.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "hacache/analytic_env.hpp"
#include "hacache/controller.hpp"
#include "hacache/model.hpp"
#include "hacache/nhc.hpp"
#include "hacache/planner.hpp"
#include "hacache/scenario.hpp"
#include "hacache/sim/simulator.hpp"
#include "hacache/trace.hpp"

namespace hacache {

// ---------------------------------------------------------------- plan

struct PlanReport {
  std::vector<std::string> devices;
  std::vector<double> b_max;
  double c_max = 0.0;
  DiversionPlan plan;
  double bound = 0.0;

  double utilization() const { return bound > 0.0 ? plan.aggregate() / bound : 0.0; }

  /// Sum of max(T*, b_max_i): the level each drive could show if drives
  /// above T* ran at their own peak instead of the common level.
  double peak_level_sum() const {
    double s = 0.0;
    for (double b : b_max) s += std::max(plan.t_star, b);
    return s;
  }
};

inline PlanReport cmd_plan(const ScenarioConfig& cfg) {
  const auto arr = cfg.array();
  PlanReport r;
  for (const auto& d : arr.backends) r.devices.push_back(d.id());
  r.b_max = arr.backend_bandwidth(cfg.block_size);
  r.c_max = arr.cache_bandwidth(cfg.block_size);
  r.plan = plan_optimal(r.b_max, r.c_max);
  r.bound = aggregate_bound(r.b_max, r.c_max);
  return r;
}

inline void write_plan_csv(std::ostream& os, const PlanReport& r) {
  os << "drive,device,b_max,rho,backend,cache,logical\n";
  for (std::size_t i = 0; i < r.b_max.size(); ++i) {
    const double rho = r.plan.rho[i];
    os << i << ',' << r.devices[i] << ',' << format_fixed(r.b_max[i], 3) << ',' << format_fixed(rho, 6) << ','
       << format_fixed((1.0 - rho) * r.plan.t_star, 3) << ',' << format_fixed(rho * r.plan.t_star, 3) << ','
       << format_fixed(r.plan.t_star, 3) << '\n';
  }
}

inline void write_plan_summary(std::ostream& os, const PlanReport& r) {
  os << "# t_star=" << format_fixed(r.plan.t_star, 3) << " k_covered=" << r.plan.k_covered
     << " cache_used=" << format_fixed(r.plan.cache_used(), 3) << " c_max=" << format_fixed(r.c_max, 3) << '\n'
     << "# S=" << format_fixed(r.plan.aggregate(), 3) << " bound=" << format_fixed(r.bound, 3)
     << " utilization=" << format_fixed(r.utilization(), 4)
     << " peak_level_sum=" << format_fixed(r.peak_level_sum(), 3) << '\n';
}

// ---------------------------------------------------------------- run

struct RunSummary {
  ControllerKind controller = ControllerKind::hacache;
  std::string topology;
  std::uint32_t block_size = 0;
  double S = 0.0;      ///< mean over the report windows
  double bound = 0.0;
  bool converged = false;
  std::size_t cycles = 0;  ///< cycles spent before the report windows
  std::size_t regulation_iterations = 0;
  std::size_t regulation_epochs = 0;
  std::vector<double> p;
  std::vector<double> h;  ///< mean over the report windows
  std::vector<std::size_t> quota;

  double utilization() const { return bound > 0.0 ? S / bound : 0.0; }
};

struct RunResult {
  RunSummary summary;
  std::vector<TraceRow> trace;
  std::size_t drives = 0;
};

namespace bench_detail {

/// Average report windows into the summary and append them to the trace.
template <class Measure>
void report(RunResult& res, std::size_t windows, Measure&& measure_once) {
  auto& s = res.summary;
  s.h.assign(res.drives, 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < windows; ++k) {
    const Telemetry t = measure_once();
    total += t.system;
    for (std::size_t i = 0; i < res.drives; ++i) s.h[i] += t.hit_rate[i];
    s.quota = t.quota();
  }
  if (windows > 0) {
    s.S = total / static_cast<double>(windows);
    for (double& h : s.h) h /= static_cast<double>(windows);
  }
}

}  // namespace bench_detail

/// Controller on the simulator; the summary averages `report_cycles`
/// windows taken after the controller finishes, so warm-up and search
/// cycles never enter the reported bandwidth.
inline RunResult cmd_run(const ScenarioConfig& cfg) {
  cfg.validate();
  sim::SimEnv env(cfg.sim_config(), cfg.window_seconds(), cfg.settle_seconds());
  RunResult res;
  res.drives = env.drive_count();
  auto& s = res.summary;
  s.controller = cfg.controller;
  s.topology = cfg.topology;
  s.block_size = cfg.block_size;
  s.bound = aggregate_bound(cfg.b_max(), cfg.c_max());

  if (cfg.controller == ControllerKind::hacache) {
    Controller ctl(env, cfg.controller_params());
    const LoopReport loop = ctl.run(cfg.max_cycles);
    s.converged = loop.converged;
    s.cycles = loop.cycles;
    s.regulation_iterations = loop.regulation_iterations();
    s.regulation_epochs = loop.regulation_epochs;
    const auto& P = ctl.state().P;
    s.p.assign(P.values().begin(), P.values().end());
    bench_detail::report(res, cfg.report_cycles, [&] { return ctl.hold(); });
    res.trace = ctl.trace();
  } else {
    const auto opt = cfg.nhc_options();
    Controller warm(env, cfg.controller_params(), ValveConfig::uniform(env.drive_count(), opt.initial));
    const bool warmed = warm.warm_up(cfg.max_cycles);
    res.trace = warm.trace();
    std::size_t cycle = warm.state().cycle;
    bool converged = false;
    double p = opt.initial;
    if (warmed && cycle < cfg.max_cycles) {
      auto nopt = opt;
      nopt.max_cycles = cfg.max_cycles - cycle;
      NhcResult r = nhc_optimize(env, nopt, cycle);
      res.trace.insert(res.trace.end(), r.trace.begin(), r.trace.end());
      cycle += r.cycles;
      converged = r.converged;
      p = r.p;
    }
    s.converged = converged;
    s.cycles = cycle;
    s.p.assign(env.drive_count(), p);
    const auto valves = ValveConfig::uniform(env.drive_count(), p);
    env.apply(valves);
    bench_detail::report(res, cfg.report_cycles, [&] {
      Telemetry t = env.measure();
      res.trace.push_back(TraceRow::from(++cycle, Phase::report, valves, t));
      return t;
    });
  }
  return res;
}

inline std::string run_summary_header(std::size_t drives) {
  std::string h = "controller,topology,block_size,S,bound,utilization,converged,cycles,regulation_iterations";
  for (std::size_t i = 0; i < drives; ++i) h += ",p" + std::to_string(i);
  for (std::size_t i = 0; i < drives; ++i) h += ",h" + std::to_string(i);
  for (std::size_t i = 0; i < drives; ++i) h += ",q" + std::to_string(i);
  return h;
}

inline std::string run_summary_row(const RunSummary& s) {
  std::string r = std::string(to_string(s.controller)) + ",\"" + s.topology + "\"," +
                  std::to_string(s.block_size) + "," + format_fixed(s.S, 3) + "," + format_fixed(s.bound, 3) +
                  "," + format_fixed(s.utilization(), 4) + "," + (s.converged ? "1" : "0") + "," +
                  std::to_string(s.cycles) + "," + std::to_string(s.regulation_iterations);
  for (double p : s.p) r += "," + format_fixed(p, 6);
  for (double h : s.h) r += "," + format_fixed(h, 4);
  for (std::size_t q : s.quota) r += "," + std::to_string(q);
  return r;
}

// ---------------------------------------------------------------- compare

struct CompareReport {
  RunSummary hacache;
  RunSummary nhc;
  double bound = 0.0;

  /// Relative gain of HACache over NHC.
  double gain() const { return nhc.S > 0.0 ? hacache.S / nhc.S - 1.0 : 0.0; }
};

inline CompareReport cmd_compare(const ScenarioConfig& cfg) {
  ScenarioConfig a = cfg;
  a.controller = ControllerKind::hacache;
  ScenarioConfig b = cfg;
  b.controller = ControllerKind::nhc;
  CompareReport r;
  r.hacache = cmd_run(a).summary;
  r.nhc = cmd_run(b).summary;
  r.bound = r.hacache.bound;
  return r;
}

inline void write_compare_csv(std::ostream& os, const CompareReport& r) {
  os << "controller,S,utilization,converged,cycles\n";
  for (const auto* s : {&r.hacache, &r.nhc}) {
    os << to_string(s->controller) << ',' << format_fixed(s->S, 3) << ',' << format_fixed(s->utilization(), 4)
       << ',' << (s->converged ? 1 : 0) << ',' << s->cycles << '\n';
  }
  os << "bound," << format_fixed(r.bound, 3) << ",1.0000,1,0\n";
}

// ---------------------------------------------------------------- sweeps

/// Run fn(0..n-1) over a small thread pool. Each index owns its own state;
/// callers store results by index, so output order never depends on timing.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

/// `samples` Latin-hypercube points in [0,1]^dims plus, when `corners` is
/// set, all 2^dims corner vectors.
inline std::vector<std::vector<double>> latin_hypercube(std::size_t samples, std::size_t dims,
                                                        std::uint64_t seed, bool corners = true) {
  sim::Rng rng(seed);
  std::vector<std::vector<double>> pts(samples, std::vector<double>(dims));
  std::vector<std::size_t> strata(samples);
  for (std::size_t d = 0; d < dims; ++d) {
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    for (std::size_t i = samples; i > 1; --i) std::swap(strata[i - 1], strata[sim::uniform_index(rng, i)]);
    for (std::size_t i = 0; i < samples; ++i) {
      pts[i][d] = (static_cast<double>(strata[i]) + sim::uniform01(rng)) / static_cast<double>(samples);
    }
  }
  if (corners && dims < 16) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << dims); ++mask) {
      std::vector<double> c(dims);
      for (std::size_t d = 0; d < dims; ++d) c[d] = (mask >> d) & 1 ? 1.0 : 0.0;
      pts.push_back(std::move(c));
    }
  }
  return pts;
}

struct ValveSweepRow {
  std::vector<double> initial;
  std::size_t cycles = 0;
  bool converged = false;
  double S = 0.0;
};

struct ValveSweepReport {
  std::vector<ValveSweepRow> rows;
  double optimum = 0.0;  ///< N * T* from the planner, ignoring hit-rate caps

  double mean_cycles() const {
    double s = 0.0;
    for (const auto& r : rows) s += static_cast<double>(r.cycles);
    return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
  }
  std::size_t max_cycles() const {
    std::size_t m = 0;
    for (const auto& r : rows) m = std::max(m, r.cycles);
    return m;
  }
  bool all_converged() const {
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.converged; });
  }
};

/// Controller parameters for the noise-free analytic environment.
inline ControllerParams analytic_params(const ScenarioConfig& cfg) {
  auto p = cfg.controller_params();
  p.decision_tolerance = 1e-9;
  p.valve_tolerance = 1e-9;
  return p;
}

/// Convergence cycles of the two-phase search from many initial valve
/// vectors, on the analytic model with a uniform hit rate.
inline ValveSweepReport cmd_sweep_valves(const ScenarioConfig& cfg, std::size_t samples,
                                         std::size_t workers = default_workers()) {
  cfg.validate();
  const auto b_max = cfg.b_max();
  const double c_max = cfg.c_max();
  const std::size_t n = b_max.size();
  const auto params = analytic_params(cfg);
  const auto starts = latin_hypercube(samples, n, cfg.seed);

  ValveSweepReport rep;
  rep.optimum = plan_optimal(b_max, c_max).aggregate();
  rep.rows.resize(starts.size());
  parallel_for(starts.size(), workers, [&](std::size_t k) {
    AnalyticEnv env(b_max, c_max, HitProfile::uniform(n, cfg.hit_rate), cfg.shard_count);
    Controller ctl(env, params, ValveConfig(starts[k]));
    const auto tp = ctl.run_two_phase(cfg.max_cycles);
    auto& row = rep.rows[k];
    row.initial = starts[k];
    row.cycles = tp.cycles;
    row.converged = tp.converged;
    env.apply(ctl.state().P);
    row.S = env.measure().system;
  });
  return rep;
}

inline void write_valve_sweep_csv(std::ostream& os, const ValveSweepReport& r) {
  const std::size_t n = r.rows.empty() ? 0 : r.rows.front().initial.size();
  os << "index";
  for (std::size_t i = 0; i < n; ++i) os << ",p" << i;
  os << ",cycles,converged,S\n";
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    const auto& row = r.rows[k];
    os << k;
    for (double p : row.initial) os << ',' << format_fixed(p, 6);
    os << ',' << row.cycles << ',' << (row.converged ? 1 : 0) << ',' << format_fixed(row.S, 3) << '\n';
  }
}

inline const std::vector<double>& default_capacity_points() {
  static const std::vector<double> pts{0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3,
                                       0.4,  0.5,  0.6,  0.7, 0.8,  0.9, 1.0};
  return pts;
}

struct CapacitySweepRow {
  double cache_frac = 0.0;
  bool converged = false;
  std::size_t regulation_iterations = 0;
  std::size_t regulation_epochs = 0;
  std::size_t cycles = 0;
  double S = 0.0;
  double utilization = 0.0;
};

/// Full controller loop on the simulator under a uniform workload, once
/// per cache capacity point.
inline std::vector<CapacitySweepRow> cmd_sweep_capacity(const ScenarioConfig& cfg,
                                                        const std::vector<double>& points = default_capacity_points(),
                                                        std::size_t workers = default_workers()) {
  std::vector<CapacitySweepRow> rows(points.size());
  parallel_for(points.size(), workers, [&](std::size_t k) {
    ScenarioConfig c = cfg;
    c.controller = ControllerKind::hacache;
    c.pattern = sim::Pattern::uniform_random;
    c.cache_frac = points[k];
    c.cache_bytes.reset();
    const auto run = cmd_run(c);
    auto& row = rows[k];
    row.cache_frac = points[k];
    row.converged = run.summary.converged;
    row.regulation_iterations = run.summary.regulation_iterations;
    row.regulation_epochs = run.summary.regulation_epochs;
    row.cycles = run.summary.cycles;
    row.S = run.summary.S;
    row.utilization = run.summary.utilization();
  });
  return rows;
}

inline void write_capacity_sweep_csv(std::ostream& os, const std::vector<CapacitySweepRow>& rows) {
  os << "index,cache_frac,converged,regulation_iterations,regulation_epochs,cycles,S,utilization\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    os << k << ',' << format_fixed(r.cache_frac, 4) << ',' << (r.converged ? 1 : 0) << ','
       << r.regulation_iterations << ',' << r.regulation_epochs << ',' << r.cycles << ',' << format_fixed(r.S, 3)
       << ',' << format_fixed(r.utilization, 4) << '\n';
  }
}

}  // namespace hacache
