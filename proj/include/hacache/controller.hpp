#pragma once

// Runtime valve control: valve estimation, the alternating two-phase valve
// search, shard-based cache capacity regulation, and the loop tying them
// together (warm-up -> two-phase -> capacity evaluation -> refill).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "hacache/error.hpp"
#include "hacache/model.hpp"
#include "hacache/telemetry.hpp"
#include "hacache/trace.hpp"

namespace hacache {

struct ControllerParams {
  double delta_b = 1000.0;              ///< phase-1 backend increment, MB/s
  std::optional<double> delta_c;        ///< phase-2 cache increment, MB/s; default 100 * N
  double p_thres = 0.9;
  std::size_t shard_count = 256;
  std::size_t delta_q = 8;              ///< shards reclaimed per surplus drive
  double noise_bound = 0.01;            ///< warm-up hit-rate stability bound
  std::size_t hit_stable_cycles = 3;
  std::size_t max_warmup_cycles = 200;
  /// Relative margin a measured change must exceed to count as a change.
  double decision_tolerance = 1e-9;
  /// A re-estimated valve closer than this to the current one is left alone.
  double valve_tolerance = 1e-9;
  bool regulation = true;

  double cache_step(std::size_t drives) const {
    return delta_c.value_or(100.0 * static_cast<double>(drives));
  }

  void validate() const {
    if (!(p_thres > 0.0 && p_thres < 1.0)) throw ConfigError("p_thres must be in (0,1)");
    if (!(delta_b > 0.0)) throw ConfigError("delta_b must be > 0");
    if (delta_c && !(*delta_c > 0.0)) throw ConfigError("delta_c must be > 0");
    if (delta_q == 0 || delta_q > shard_count) throw ConfigError("delta_q must be in [1, shard_count]");
    if (!(noise_bound > 0.0)) throw ConfigError("noise_bound must be > 0");
    if (hit_stable_cycles == 0) throw ConfigError("hit_stable_cycles must be >= 1");
    if (!(decision_tolerance >= 0.0 && decision_tolerance < 0.5)) {
      throw ConfigError("decision_tolerance must be in [0, 0.5)");
    }
    if (!(valve_tolerance >= 0.0 && valve_tolerance < 0.5)) {
      throw ConfigError("valve_tolerance must be in [0, 0.5)");
    }
  }
};

/// Valve value that makes a drive carry `backend` MB/s of a logical level
/// `level`, given hit rate `hit`: clamp((1 - backend/level) / hit, 0, 1).
/// With hit = 0 the clamp's limit is used: 0 when no diversion is needed,
/// otherwise 1.
inline double estimate_valve(double level, double backend, double hit) {
  if (!(level > 0.0)) throw DomainError("estimate_valve: logical level must be > 0");
  if (!(hit >= 0.0 && hit <= 1.0)) throw DomainError("estimate_valve: hit rate outside [0,1]");
  if (!(backend >= 0.0)) throw DomainError("estimate_valve: backend bandwidth must be >= 0");
  const double rho = 1.0 - backend / level;
  if (hit == 0.0) return rho > 0.0 ? 1.0 : 0.0;
  return std::clamp(rho / hit, 0.0, 1.0);
}

struct ControllerState {
  ValveConfig P;
  Phase phase = Phase::warm_up;
  std::vector<bool> received_capacity;
  std::size_t cycle = 0;
  double last_S = 0.0;
};

struct TwoPhaseReport {
  bool converged = false;
  std::size_t cycles = 0;
  std::vector<double> s_trajectory;
};

struct RegulationOutcome {
  std::vector<std::size_t> needy;
  std::vector<std::size_t> surplus;
  std::vector<std::size_t> skipped;  ///< surplus drives failing the contribution check
  std::vector<std::size_t> donors;   ///< surplus drives actually reclaimed from
  std::vector<ShardMove> moves;

  bool regulated() const { return !moves.empty(); }
};

/// A valve vector the controller adopted, with the S measured under it.
struct Commit {
  std::size_t sweep = 0;  ///< phase sweep in which it happened
  Phase phase = Phase::phase1;
  std::size_t cycle = 0;
  double S = 0.0;
};

struct LoopOptions {
  /// Keep re-running the two-phase search after reaching Stable.
  bool track_drift = false;
  std::size_t drift_probe_interval = 10;
};

struct LoopReport {
  Phase final_phase = Phase::warm_up;
  bool converged = false;              ///< reached Stable
  std::size_t cycles = 0;
  std::size_t capacity_evaluations = 0;
  std::size_t regulation_epochs = 0;   ///< evaluations that moved shards
  std::vector<std::size_t> two_phase_cycles;
  std::vector<RegulationOutcome> outcomes;

  /// Warm-up + two-phase + evaluation passes up to the last one that moved
  /// capacity; a run that never regulates counts as one iteration.
  std::size_t regulation_iterations() const {
    return converged ? std::max<std::size_t>(1, regulation_epochs) : regulation_epochs;
  }
};

template <measurement_env Env>
class Controller {
 public:
  Controller(Env& env, ControllerParams params, ValveConfig initial)
      : env_(env), params_(std::move(params)) {
    params_.validate();
    if (initial.size() != env_.drive_count()) throw ConfigError("initial valve length mismatch");
    state_.P = std::move(initial);
    state_.received_capacity.assign(env_.drive_count(), false);
    applied_ = state_.P;
  }

  Controller(Env& env, ControllerParams params)
      : Controller(env, std::move(params), ValveConfig::uniform(env.drive_count(), 1.0)) {}

  const ControllerState& state() const { return state_; }
  const ControllerParams& params() const { return params_; }
  const std::vector<TraceRow>& trace() const { return trace_; }
  const std::optional<Telemetry>& current() const { return current_; }
  /// Baseline and every adoption, per sweep; S never drops within a sweep
  /// on a noise-free environment.
  const std::vector<Commit>& commits() const { return commits_; }

  /// Phase 1: for each drive in turn, ask it to carry delta_b more backend
  /// bandwidth at its current logical level. Commit while the level holds; on a
  /// drop, re-estimate the valve from the bandwidth the drive actually
  /// delivered during the failed probe and move on.
  bool phase1_sweep() {
    state_.phase = Phase::phase1;
    if (!ensure_current()) return false;
    begin_sweep();
    bool changed = false;
    const std::size_t n = env_.drive_count();
    for (std::size_t i = 0; i < n && !exhausted(); ++i) {
      while (!exhausted()) {
        const Telemetry cur = *current_;
        const double level = cur.logical[i];
        const double hit = cur.hit_rate[i];
        const double target = valve_for(level, cur.backend[i] + params_.delta_b, hit);
        if (same_valve(target, state_.P[i])) {
          changed |= settle(i, valve_for(level, cur.backend[i], hit));
          break;
        }
        ValveConfig candidate = state_.P;
        candidate.set(i, target);
        const Telemetry t = probe(candidate);
        if (t.level() < cur.level() * (1.0 - params_.decision_tolerance)) {
          restore();
          changed |= settle(i, valve_for(level, t.backend[i], hit));
          break;
        }
        state_.P = std::move(candidate);
        current_ = t;
        record_commit();
        changed = true;
      }
    }
    return changed;
  }

  /// Phase 2: raise every drive's level by delta_c / N and re-estimate every
  /// valve together; commit while S improves, otherwise restore and stop.
  bool phase2_sweep() {
    state_.phase = Phase::phase2;
    if (!ensure_current()) return false;
    begin_sweep();
    bool changed = false;
    const std::size_t n = env_.drive_count();
    const double step = params_.cache_step(n) / static_cast<double>(n);
    while (!exhausted()) {
      const Telemetry cur = *current_;
      ValveConfig candidate = state_.P;
      for (std::size_t i = 0; i < n; ++i) {
        candidate.set(i, valve_for(cur.logical[i] + step, cur.backend[i], cur.hit_rate[i]));
      }
      if (candidate.near(state_.P, kValveEps)) break;
      const Telemetry t = probe(candidate);
      if (!(t.system > cur.system * (1.0 + params_.decision_tolerance))) {
        restore();
        break;
      }
      state_.P = std::move(candidate);
      current_ = t;
      record_commit();
      changed = true;
    }
    return changed;
  }

  /// Alternate the phases until two consecutive completed phases leave P
  /// unchanged, or the cycle budget runs out.
  TwoPhaseReport run_two_phase(std::size_t max_cycles) {
    const std::size_t start = state_.cycle;
    const std::size_t saved_limit = limit_;
    limit_ = std::min(limit_, start + max_cycles);
    interrupted_ = false;
    TwoPhaseReport rep;
    std::size_t quiet = 0;
    bool first = true;
    while (!exhausted()) {
      const bool changed = first ? phase1_sweep() : phase2_sweep();
      if (interrupted_) break;
      first = !first;
      quiet = changed ? 0 : quiet + 1;
      if (quiet >= 2) {
        rep.converged = true;
        break;
      }
    }
    rep.cycles = state_.cycle - start;
    for (const auto& row : trace_) {
      if (row.cycle > start) rep.s_trajectory.push_back(row.S);
    }
    limit_ = saved_limit;
    interrupted_ = false;
    return rep;
  }

  /// Move delta_q shards from each surplus drive (valve below p_thres, never
  /// a recipient) to the needy drives (valve at 1), unless the shards carry
  /// enough of the donor's hits that losing them would starve its current
  /// diversion.
  RegulationOutcome regulate_capacity() {
    state_.phase = Phase::capacity_eval;
    RegulationOutcome out;
    if (!current_) return out;
    const std::size_t n = env_.drive_count();
    const auto& owner = current_->shard_owner;
    if (hit_acc_.size() != owner.size()) hit_acc_.assign(owner.size(), 0);

    for (std::size_t i = 0; i < n; ++i) {
      if (state_.P[i] >= 1.0 - kValveEps) out.needy.push_back(i);
    }
    if (out.needy.empty()) return out;

    const auto quota = current_->quota();
    for (std::size_t i = 0; i < n; ++i) {
      if (state_.P[i] < params_.p_thres && !state_.received_capacity[i] && quota[i] > 0) {
        out.surplus.push_back(i);
      }
    }
    if (out.surplus.empty()) return out;

    std::vector<std::size_t> reclaimed;
    for (std::size_t donor : out.surplus) {
      std::vector<std::size_t> shards;
      std::uint64_t drive_hits = 0;
      for (std::size_t s = 0; s < owner.size(); ++s) {
        if (owner[s] == static_cast<int>(donor)) {
          shards.push_back(s);
          drive_hits += hit_acc_[s];
        }
      }
      std::stable_sort(shards.begin(), shards.end(),
                       [&](std::size_t a, std::size_t b) { return hit_acc_[a] < hit_acc_[b]; });
      shards.resize(std::min(shards.size(), params_.delta_q));
      std::uint64_t shard_hits = 0;
      for (std::size_t s : shards) shard_hits += hit_acc_[s];
      const double contribution =
          drive_hits == 0 ? 0.0 : static_cast<double>(shard_hits) / static_cast<double>(drive_hits);
      if (contribution + state_.P[donor] > 1.0) {
        out.skipped.push_back(donor);
        continue;
      }
      out.donors.push_back(donor);
      reclaimed.insert(reclaimed.end(), shards.begin(), shards.end());
    }
    if (reclaimed.empty()) return out;

    // Even split; the remainder goes one each to needy drives in ascending order.
    std::sort(reclaimed.begin(), reclaimed.end());
    const std::size_t k = out.needy.size();
    const std::size_t base = reclaimed.size() / k;
    const std::size_t extra = reclaimed.size() % k;
    std::size_t next = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t take = base + (j < extra ? 1 : 0);
      for (std::size_t t = 0; t < take; ++t) {
        out.moves.push_back({reclaimed[next++], static_cast<int>(out.needy[j])});
      }
      if (take > 0) state_.received_capacity[out.needy[j]] = true;
    }
    env_.reassign_shards(out.moves);
    current_.reset();
    return out;
  }

  /// Measure under the current valves until every drive's hit rate moves by
  /// at most noise_bound for hit_stable_cycles consecutive cycles. Cycles
  /// with no traffic never count as stable. Returns false if the budget ran
  /// out (or the warm-up cap was reached without traffic).
  bool warm_up(std::size_t max_cycles) {
    state_.phase = Phase::warm_up;
    restore();
    const std::size_t cap = std::min(max_cycles, params_.max_warmup_cycles);
    std::optional<std::vector<double>> prev;
    std::size_t streak = 0;
    bool saw_traffic = false;
    for (std::size_t c = 0; c < cap && !exhausted(); ++c) {
      Telemetry t = measure();
      if (t.total_lookups() == 0) {
        prev.reset();
        streak = 0;
        continue;
      }
      saw_traffic = true;
      if (prev) {
        bool steady = true;
        for (std::size_t i = 0; i < t.hit_rate.size(); ++i) {
          if (std::abs(t.hit_rate[i] - (*prev)[i]) > params_.noise_bound) steady = false;
        }
        streak = steady ? streak + 1 : 0;
      }
      prev = t.hit_rate;
      current_ = std::move(t);
      if (streak >= params_.hit_stable_cycles) break;
    }
    if (streak < params_.hit_stable_cycles && (!saw_traffic || cap == max_cycles)) return false;
    hit_acc_.assign(current_->shard_owner.size(), 0);
    return true;
  }

  /// Warm-up, two-phase search, capacity evaluation; regulate and refill
  /// while both needy and surplus drives exist, then hold.
  LoopReport run(std::size_t max_cycles, const LoopOptions& opt = {}) {
    const std::size_t start = state_.cycle;
    limit_ = start + max_cycles;
    LoopReport rep;
    for (;;) {
      if (!warm_up(remaining())) break;
      const auto tp = run_two_phase(remaining());
      rep.two_phase_cycles.push_back(tp.cycles);
      if (!tp.converged) break;
      if (!params_.regulation) {
        state_.phase = Phase::stable;
        break;
      }
      const auto outcome = regulate_capacity();
      rep.outcomes.push_back(outcome);
      ++rep.capacity_evaluations;
      if (outcome.regulated()) {
        ++rep.regulation_epochs;
        continue;
      }
      state_.phase = Phase::stable;
      break;
    }
    rep.converged = state_.phase == Phase::stable;
    if (rep.converged && opt.track_drift) {
      while (!exhausted()) {
        for (std::size_t c = 0; c < opt.drift_probe_interval && !exhausted(); ++c) {
          state_.phase = Phase::stable;
          current_ = measure();
        }
        run_two_phase(remaining());
        state_.phase = Phase::stable;
      }
    }
    rep.final_phase = state_.phase;
    rep.cycles = state_.cycle - start;
    limit_ = kUnlimited;
    return rep;
  }

  /// Extra cycles at the committed valves, tagged as reporting.
  Telemetry hold(Phase tag = Phase::report) {
    restore();
    const Phase saved = state_.phase;
    state_.phase = tag;
    current_ = measure();
    state_.phase = saved;
    return *current_;
  }

 private:
  static constexpr double kValveEps = 1e-9;
  static constexpr std::size_t kUnlimited = static_cast<std::size_t>(-1);

  static bool same_valve(double a, double b) { return std::abs(a - b) <= kValveEps; }

  /// estimate_valve, extended to an idle system: with nothing flowing the
  /// only useful direction is less diversion.
  static double valve_for(double level, double backend, double hit) {
    if (!(level > 0.0)) return 0.0;
    return estimate_valve(level, std::max(0.0, backend), hit);
  }

  bool exhausted() {
    if (state_.cycle >= limit_) {
      interrupted_ = true;
      return true;
    }
    return false;
  }

  std::size_t remaining() const { return limit_ > state_.cycle ? limit_ - state_.cycle : 0; }

  Telemetry measure() {
    Telemetry t = env_.measure();
    ++state_.cycle;
    state_.last_S = t.system;
    if (state_.phase == Phase::phase1 || state_.phase == Phase::phase2) {
      if (hit_acc_.size() != t.shard_hits.size()) hit_acc_.assign(t.shard_hits.size(), 0);
      for (std::size_t s = 0; s < t.shard_hits.size(); ++s) hit_acc_[s] += t.shard_hits[s];
    }
    trace_.push_back(TraceRow::from(state_.cycle, state_.phase, applied_, t));
    return t;
  }

  void restore() {
    env_.apply(state_.P);
    applied_ = state_.P;
  }

  Telemetry probe(const ValveConfig& candidate) {
    env_.apply(candidate);
    applied_ = candidate;
    return measure();
  }

  bool ensure_current() {
    if (current_) return true;
    if (exhausted()) return false;
    current_ = probe(state_.P);
    return true;
  }

  /// Set drive i's valve if it moved by more than valve_tolerance,
  /// re-measuring under the new P.
  bool settle(std::size_t i, double value) {
    applied_ = state_.P;
    if (std::abs(value - state_.P[i]) <= std::max(kValveEps, params_.valve_tolerance)) return false;
    state_.P.set(i, value);
    if (exhausted()) {
      env_.apply(state_.P);
      current_.reset();
      return true;
    }
    current_ = probe(state_.P);
    record_commit();
    return true;
  }

  void begin_sweep() {
    ++sweep_;
    record_commit();
  }

  void record_commit() { commits_.push_back({sweep_, state_.phase, state_.cycle, current_->system}); }

  Env& env_;
  ControllerParams params_;
  ControllerState state_;
  ValveConfig applied_;
  std::optional<Telemetry> current_;
  std::vector<std::uint64_t> hit_acc_;
  std::vector<TraceRow> trace_;
  std::vector<Commit> commits_;
  std::size_t sweep_ = 0;
  std::size_t limit_ = kUnlimited;
  bool interrupted_ = false;
};

}  // namespace hacache
