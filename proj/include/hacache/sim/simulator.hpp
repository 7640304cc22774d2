#pragma once

// Request-level discrete-event simulation of a striped array with a shard
// cache in front of it.
//
// A fixed number of requests (threads x queue depth) is always outstanding:
// each completion immediately issues the next request. Every device serves
// its FIFO queue one request at a time at its profiled rate, so a slow drive
// holding most of the outstanding window throttles everyone else.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hacache/error.hpp"
#include "hacache/model.hpp"
#include "hacache/sim/shard_cache.hpp"
#include "hacache/sim/stripe.hpp"
#include "hacache/sim/workload.hpp"
#include "hacache/telemetry.hpp"

namespace hacache::sim {

struct SimConfig {
  ArrayTopology topology;
  WorkloadSpec workload;
  double cache_frac = 0.0;                  ///< of the I/O range; ignored if cache_bytes set
  std::optional<std::uint64_t> cache_bytes;
  std::size_t shard_count = 256;

  std::uint64_t cache_blocks() const {
    const std::uint64_t blocks = workload.block_count();
    if (cache_bytes) return std::min(blocks, *cache_bytes / workload.block_size);
    return std::min<std::uint64_t>(
        blocks, static_cast<std::uint64_t>(std::floor(cache_frac * static_cast<double>(blocks))));
  }

  void validate() const {
    topology.validate();
    workload.validate();
    if (!(cache_frac >= 0.0 && cache_frac <= 1.0)) throw ConfigError("cache_frac must be in [0,1]");
    if (shard_count == 0) throw ConfigError("shard_count must be >= 1");
    for (const auto& d : topology.backends) (void)d.bandwidth_at(workload.block_size);
    (void)topology.cache_bandwidth(workload.block_size);
  }
};

enum class Route { cache_hit_served, cache_hit_forwarded, miss };

/// Route one request for `block` owned by `drive`: a hit is served by the
/// cache with probability p_drive, otherwise it goes to the backend; a miss
/// goes to the backend and is admitted to the drive's shards.
inline Route dispatch(std::uint64_t block, std::size_t drive, ShardCache& cache,
                      std::span<const double> valves, Rng& rng) {
  if (cache.lookup(block)) {
    return uniform01(rng) < valves[drive] ? Route::cache_hit_served : Route::cache_hit_forwarded;
  }
  cache.admit(block, drive);
  return Route::miss;
}

/// Counters for one measurement window.
struct TelemetrySample {
  double window = 0.0;  ///< simulated seconds
  std::uint32_t block_size = 0;
  std::vector<std::uint64_t> backend_bytes;  ///< served by each backend drive
  std::vector<std::uint64_t> cache_bytes;    ///< served by the cache, per owner drive
  std::vector<std::uint64_t> hits;           ///< per owner drive
  std::vector<std::uint64_t> lookups;        ///< requests routed to each drive
  std::vector<std::uint64_t> shard_hits;
  std::vector<double> mean_queue;            ///< time-averaged queue length per backend
  double cache_mean_queue = 0.0;
  std::uint64_t completed = 0;

  double mbps(std::uint64_t bytes) const { return window > 0.0 ? static_cast<double>(bytes) / window / 1e6 : 0.0; }

  std::uint64_t total_bytes() const {
    return std::accumulate(backend_bytes.begin(), backend_bytes.end(), std::uint64_t{0}) +
           std::accumulate(cache_bytes.begin(), cache_bytes.end(), std::uint64_t{0});
  }

  /// Share of the backends' queued requests held by each drive.
  std::vector<double> queue_share() const {
    const double total = std::accumulate(mean_queue.begin(), mean_queue.end(), 0.0);
    std::vector<double> out(mean_queue.size(), 0.0);
    if (total > 0.0) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = mean_queue[i] / total;
    }
    return out;
  }

  std::vector<double> arrival_share() const {
    const double total = static_cast<double>(std::accumulate(lookups.begin(), lookups.end(), std::uint64_t{0}));
    std::vector<double> out(lookups.size(), 0.0);
    if (total > 0.0) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(lookups[i]) / total;
    }
    return out;
  }

  Telemetry to_telemetry(std::vector<int> shard_owner) const {
    const std::size_t n = backend_bytes.size();
    Telemetry t;
    t.backend.resize(n);
    t.logical.resize(n);
    t.hit_rate.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      t.backend[i] = mbps(backend_bytes[i]);
      t.logical[i] = t.backend[i] + mbps(cache_bytes[i]);
      t.system += t.logical[i];
      t.hit_rate[i] = lookups[i] ? static_cast<double>(hits[i]) / static_cast<double>(lookups[i]) : 0.0;
    }
    t.lookups = lookups;
    t.shard_hits = shard_hits;
    t.shard_owner = std::move(shard_owner);
    return t;
  }
};

class Simulator {
 public:
  explicit Simulator(SimConfig cfg)
      : cfg_((cfg.validate(), std::move(cfg))),
        stripes_(cfg_.topology.drive_count(), cfg_.topology.stripe_unit, cfg_.workload.block_size,
                 cfg_.workload.block_count()),
        stream_(cfg_.workload, cfg_.topology.drive_count(),
                [this](std::uint64_t b) { return stripes_.drive_of(b); }),
        cache_(cfg_.topology.drive_count(), cfg_.shard_count, shard_capacity(cfg_),
               cfg_.workload.block_count()),
        rng_(cfg_.workload.seed),
        valves_(cfg_.topology.drive_count(), 1.0) {
    const std::size_t n = cfg_.topology.drive_count();
    devices_.resize(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
      devices_[i].service = service_time(cfg_.topology.backends[i]);
    }
    devices_[n].service = service_time(cfg_.topology.cache);
    reset_window();
  }

  const SimConfig& config() const { return cfg_; }
  std::size_t drive_count() const { return cfg_.topology.drive_count(); }
  double now() const { return now_; }
  const ShardCache& cache() const { return cache_; }
  const StripeMap& stripes() const { return stripes_; }
  std::uint64_t generated() const { return generated_; }
  std::uint64_t completed() const { return completed_; }
  std::uint64_t outstanding() const { return generated_ - completed_; }
  std::span<const double> valves() const { return valves_; }

  void set_valves(const ValveConfig& p) {
    if (p.size() != drive_count()) throw ConfigError("simulator: valve length mismatch");
    valves_.assign(p.values().begin(), p.values().end());
  }

  void reassign_shards(std::span<const ShardMove> moves) {
    for (const auto& m : moves) {
      if (m.to < 0) throw ConfigError("simulator: invalid shard owner");
      cache_.reassign(m.shard, static_cast<std::size_t>(m.to));
    }
  }

  /// Process every completion up to `until` and move the clock there.
  std::size_t advance(double until) {
    start();
    std::size_t events = 0;
    for (;;) {
      std::size_t next = devices_.size();
      double when = std::numeric_limits<double>::infinity();
      for (std::size_t d = 0; d < devices_.size(); ++d) {
        if (!devices_[d].queue.empty() && devices_[d].done < when) {
          when = devices_[d].done;
          next = d;
        }
      }
      if (next == devices_.size() || when > until) break;
      complete(next, when);
      ++events;
    }
    if (until > now_) now_ = until;
    return events;
  }

  /// Run one window and return its counters; counters restart afterwards.
  TelemetrySample measure_cycle(double window) {
    if (!(window > 0.0)) throw DomainError("measurement window must be > 0");
    reset_window();
    const double from = now_;
    advance(now_ + window);
    for (auto& dev : devices_) dev.touch(now_);

    const std::size_t n = drive_count();
    TelemetrySample s = window_;
    s.window = now_ - from;
    s.block_size = cfg_.workload.block_size;
    s.mean_queue.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.mean_queue[i] = devices_[i].area / s.window;
    s.cache_mean_queue = devices_[n].area / s.window;
    return s;
  }

 private:
  struct Request {
    std::uint32_t owner;
    bool cached;
  };

  struct Device {
    double service = 0.0;  ///< seconds per request
    std::deque<Request> queue;
    double done = 0.0;     ///< completion time of the request in service
    double area = 0.0;     ///< integral of queue length over the window
    double last = 0.0;

    void touch(double t) {
      area += static_cast<double>(queue.size()) * (t - last);
      last = t;
    }
  };

  static std::size_t shard_capacity(const SimConfig& cfg) {
    const std::uint64_t blocks = cfg.cache_blocks();
    if (blocks == 0) return 0;
    return std::max<std::size_t>(1, static_cast<std::size_t>(blocks / cfg.shard_count));
  }

  double service_time(const DeviceProfile& d) const {
    return static_cast<double>(cfg_.workload.block_size) / (d.bandwidth_at(cfg_.workload.block_size) * 1e6);
  }

  void reset_window() {
    const std::size_t n = drive_count();
    window_ = TelemetrySample{};
    window_.backend_bytes.assign(n, 0);
    window_.cache_bytes.assign(n, 0);
    window_.hits.assign(n, 0);
    window_.lookups.assign(n, 0);
    window_.shard_hits.assign(cache_.shard_count(), 0);
    for (auto& dev : devices_) {
      dev.area = 0.0;
      dev.last = now_;
    }
  }

  void start() {
    if (started_) return;
    started_ = true;
    const std::uint64_t depth = cfg_.workload.outstanding();
    for (std::uint64_t k = 0; k < depth; ++k) issue();
  }

  void issue() {
    const auto& limit = cfg_.workload.request_limit;
    if (limit && generated_ >= *limit) return;
    ++generated_;
    const std::uint64_t block = stream_.next(rng_);
    const std::size_t drive = stripes_.drive_of(block);
    ++window_.lookups[drive];
    if (const auto shard = cache_.lookup(block)) {
      ++window_.hits[drive];
      ++window_.shard_hits[*shard];
    }
    const Route r = dispatch(block, drive, cache_, valves_, rng_);
    const bool cached = r == Route::cache_hit_served;
    enqueue(cached ? drive_count() : drive, Request{static_cast<std::uint32_t>(drive), cached});
  }

  void enqueue(std::size_t d, Request req) {
    Device& dev = devices_[d];
    dev.touch(now_);
    if (dev.queue.empty()) dev.done = now_ + dev.service;
    dev.queue.push_back(req);
  }

  void complete(std::size_t d, double t) {
    now_ = t;
    Device& dev = devices_[d];
    dev.touch(t);
    const Request req = dev.queue.front();
    dev.queue.pop_front();
    if (!dev.queue.empty()) dev.done = t + dev.service;
    const std::uint64_t bytes = cfg_.workload.block_size;
    if (req.cached) window_.cache_bytes[req.owner] += bytes;
    else window_.backend_bytes[req.owner] += bytes;
    ++window_.completed;
    ++completed_;
    issue();
  }

  SimConfig cfg_;
  StripeMap stripes_;
  BlockStream stream_;
  ShardCache cache_;
  Rng rng_;
  std::vector<double> valves_;
  std::vector<Device> devices_;
  TelemetrySample window_;
  double now_ = 0.0;
  bool started_ = false;
  std::uint64_t generated_ = 0;
  std::uint64_t completed_ = 0;
};

/// Simulator adapter for the controller: one measure() is one window.
///
/// After the valves or shard owners change, the next measure() first runs
/// `settle` unrecorded seconds so the outstanding requests can redistribute
/// over the devices before counting starts.
class SimEnv {
 public:
  SimEnv(SimConfig cfg, double window_seconds, double settle_seconds = 0.0)
      : sim_(std::move(cfg)), window_(window_seconds), settle_(settle_seconds) {
    if (!(window_ > 0.0)) throw ConfigError("measurement window must be > 0");
    if (!(settle_ >= 0.0)) throw ConfigError("settle time must be >= 0");
  }

  std::size_t drive_count() const { return sim_.drive_count(); }

  void apply(const ValveConfig& p) {
    if (!std::ranges::equal(p.values(), sim_.valves())) dirty_ = true;
    sim_.set_valves(p);
  }

  Telemetry measure() {
    if (dirty_ && settle_ > 0.0) sim_.advance(sim_.now() + settle_);
    dirty_ = false;
    last_ = sim_.measure_cycle(window_);
    return last_.to_telemetry(sim_.cache().shard_owner());
  }

  void reassign_shards(std::span<const ShardMove> moves) {
    sim_.reassign_shards(moves);
    if (!moves.empty()) dirty_ = true;
  }

  Simulator& simulator() { return sim_; }
  const Simulator& simulator() const { return sim_; }
  const TelemetrySample& last_sample() const { return last_; }
  double window() const { return window_; }
  double settle() const { return settle_; }

 private:
  Simulator sim_;
  double window_;
  double settle_;
  bool dirty_ = false;
  TelemetrySample last_;
};

static_assert(measurement_env<SimEnv>);

}  // namespace hacache::sim
