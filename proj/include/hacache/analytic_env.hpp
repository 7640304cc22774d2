#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hacache/error.hpp"
#include "hacache/model.hpp"
#include "hacache/telemetry.hpp"

namespace hacache {

/// Measurement environment backed by steady_state_solve.
///
/// Hit rates are either fixed, or follow a uniform-workload capacity model
/// in which drive i's hit rate is its share of the cache relative to its
/// share of the address space: h_i = min(1, cache_frac * N * quota_i / shards).
class AnalyticEnv {
 public:
  AnalyticEnv(std::vector<double> b_max, double c_max, HitProfile h, std::size_t shard_count = 256)
      : b_max_(std::move(b_max)), c_max_(c_max), h_(std::move(h)) {
    if (b_max_.size() != h_.size()) throw ConfigError("AnalyticEnv: hit profile length mismatch");
    init_shards(shard_count);
  }

  /// Hit rates derived from shard quotas under a uniform workload.
  static AnalyticEnv with_uniform_cache(std::vector<double> b_max, double c_max, double cache_frac,
                                        std::size_t shard_count = 256) {
    const std::size_t n = b_max.size();
    AnalyticEnv env(std::move(b_max), c_max, HitProfile::uniform(n, 0.0), shard_count);
    env.cache_frac_ = cache_frac;
    env.refresh_hit_rates();
    return env;
  }

  std::size_t drive_count() const { return b_max_.size(); }
  const ValveConfig& valves() const { return p_; }
  const HitProfile& hit_profile() const { return h_; }
  std::span<const double> b_max() const { return b_max_; }
  double c_max() const { return c_max_; }
  std::span<const int> shard_owner() const { return owner_; }
  std::size_t cycles() const { return cycles_; }

  void apply(const ValveConfig& p) {
    if (p.size() != b_max_.size()) throw ConfigError("AnalyticEnv: valve length mismatch");
    p_ = p;
  }

  void set_hit_rates(HitProfile h) {
    if (h.size() != b_max_.size()) throw ConfigError("AnalyticEnv: hit profile length mismatch");
    h_ = std::move(h);
    cache_frac_.reset();
  }

  Telemetry measure() {
    ++cycles_;
    const auto rho = effective_diversion(p_, h_);
    const auto ss = steady_state_solve(rho, b_max_, c_max_);
    Telemetry t;
    t.backend = ss.b;
    t.logical.resize(ss.b.size());
    for (std::size_t i = 0; i < ss.b.size(); ++i) t.logical[i] = ss.b[i] + ss.c[i];
    t.system = ss.S;
    t.hit_rate.assign(h_.values().begin(), h_.values().end());

    // Synthetic counts: a nominal million lookups per drive, hits spread
    // evenly over the drive's shards.
    constexpr std::uint64_t kLookups = 1'000'000;
    t.lookups.assign(drive_count(), kLookups);
    t.shard_owner = owner_;
    t.shard_hits.assign(owner_.size(), 0);
    const auto quota = t.quota();
    for (std::size_t s = 0; s < owner_.size(); ++s) {
      const auto i = static_cast<std::size_t>(owner_[s]);
      const double hits = std::round(h_[i] * static_cast<double>(kLookups));
      t.shard_hits[s] = static_cast<std::uint64_t>(hits / static_cast<double>(quota[i]));
    }
    return t;
  }

  void reassign_shards(std::span<const ShardMove> moves) {
    for (const auto& m : moves) {
      if (m.shard >= owner_.size() || m.to < 0 || static_cast<std::size_t>(m.to) >= drive_count()) {
        throw ConfigError("AnalyticEnv: invalid shard move");
      }
      owner_[m.shard] = m.to;
    }
    if (cache_frac_) refresh_hit_rates();
  }

 private:
  void init_shards(std::size_t shard_count) {
    owner_.resize(shard_count);
    for (std::size_t s = 0; s < shard_count; ++s) {
      owner_[s] = static_cast<int>(s % b_max_.size());
    }
  }

  void refresh_hit_rates() {
    std::vector<std::size_t> quota(drive_count(), 0);
    for (int o : owner_) ++quota[static_cast<std::size_t>(o)];
    std::vector<double> h(drive_count());
    const double n = static_cast<double>(drive_count());
    const double shards = static_cast<double>(owner_.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
      h[i] = std::min(1.0, *cache_frac_ * n * static_cast<double>(quota[i]) / shards);
    }
    h_ = HitProfile(std::move(h));
  }

  std::vector<double> b_max_;
  double c_max_;
  HitProfile h_;
  ValveConfig p_{std::vector<double>(b_max_.size(), 1.0)};
  std::optional<double> cache_frac_;
  std::vector<int> owner_;
  std::size_t cycles_ = 0;
};

static_assert(measurement_env<AnalyticEnv>);

}  // namespace hacache
