#pragma once

// Single-scalar offloading baseline: one global valve p shared by every
// drive, tuned by hill climbing on S.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "hacache/error.hpp"
#include "hacache/model.hpp"
#include "hacache/telemetry.hpp"
#include "hacache/trace.hpp"

namespace hacache {

struct NhcOptions {
  double step = 0.05;
  double initial = 0.0;
  std::size_t max_cycles = 10'000;
  double decision_tolerance = 1e-9;
};

struct NhcResult {
  double p = 0.0;
  double S = 0.0;
  bool converged = false;
  std::size_t cycles = 0;
  std::vector<double> trajectory;  ///< S of every measured cycle
  std::vector<TraceRow> trace;
  std::optional<Telemetry> last;   ///< telemetry at the converged p
};

/// Probe S at p - s and p + s, move to whichever beats S(p) by more than the
/// decision tolerance, and stop once neither neighbour does.
template <measurement_env Env>
NhcResult nhc_optimize(Env& env, const NhcOptions& opt = {}, std::size_t cycle_offset = 0) {
  if (!(opt.step > 0.0 && opt.step <= 0.5)) throw DomainError("nhc: step must be in (0, 0.5]");
  if (!(opt.initial >= 0.0 && opt.initial <= 1.0)) throw DomainError("nhc: initial p outside [0,1]");
  const std::size_t n = env.drive_count();

  NhcResult res;
  auto eval = [&](double p) {
    const auto valves = ValveConfig::uniform(n, p);
    env.apply(valves);
    Telemetry t = env.measure();
    ++res.cycles;
    res.trajectory.push_back(t.system);
    res.trace.push_back(TraceRow::from(cycle_offset + res.cycles, Phase::nhc, valves, t));
    return t;
  };

  // p stays on the grid initial + k * step so repeated steps do not drift.
  auto at = [&](long k) {
    return std::clamp(opt.initial + static_cast<double>(k) * opt.step, 0.0, 1.0);
  };
  long k = 0;
  double p = at(k);
  Telemetry here = eval(p);
  while (res.cycles < opt.max_cycles) {
    long best_k = k;
    double best_s = here.system * (1.0 + opt.decision_tolerance);
    std::optional<Telemetry> best_t;
    bool complete = true;
    for (long nk : {k - 1, k + 1}) {
      const double cand = at(nk);
      if (cand == p) continue;
      if (res.cycles >= opt.max_cycles) {
        complete = false;
        continue;
      }
      Telemetry t = eval(cand);
      if (t.system > best_s) {
        best_s = t.system;
        best_k = nk;
        best_t = std::move(t);
      }
    }
    if (!best_t) {
      res.converged = complete;
      break;
    }
    k = best_k;
    p = at(k);
    here = std::move(*best_t);
  }
  env.apply(ValveConfig::uniform(n, p));
  res.p = p;
  res.S = here.system;
  res.last = std::move(here);
  return res;
}

}  // namespace hacache
