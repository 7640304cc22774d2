#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "hacache/model.hpp"

namespace hacache {

/// What the controller sees at the end of one telemetry cycle.
struct Telemetry {
  std::vector<double> backend;   ///< b_i(P), MB/s
  std::vector<double> logical;   ///< T_i(P) = b_i + c_i, MB/s
  double system = 0.0;           ///< S(P), MB/s
  std::vector<double> hit_rate;  ///< h_i over the cycle
  std::vector<std::uint64_t> lookups;     ///< logical requests per drive
  std::vector<std::uint64_t> shard_hits;  ///< hits per cache shard
  std::vector<int> shard_owner;           ///< owning drive per shard

  std::size_t drive_count() const { return backend.size(); }

  /// Per-drive logical level T(P). Striping makes T_i equal across drives,
  /// so the system mean is used; it averages out per-drive sampling noise.
  double level() const {
    return backend.empty() ? 0.0 : system / static_cast<double>(backend.size());
  }

  std::uint64_t total_lookups() const {
    return std::accumulate(lookups.begin(), lookups.end(), std::uint64_t{0});
  }

  std::vector<std::size_t> quota() const {
    std::vector<std::size_t> q(backend.size(), 0);
    for (int owner : shard_owner) {
      if (owner >= 0 && static_cast<std::size_t>(owner) < q.size()) ++q[owner];
    }
    return q;
  }
};

struct ShardMove {
  std::size_t shard = 0;
  int to = 0;

  friend bool operator==(const ShardMove&, const ShardMove&) = default;
};

/// Anything the controller can drive: apply a valve vector, run one cycle,
/// and move cache shards between owners (invalidating their contents).
template <class E>
concept measurement_env = requires(E& env, const E& cenv, const ValveConfig& p,
                                   std::span<const ShardMove> moves) {
  { cenv.drive_count() } -> std::convertible_to<std::size_t>;
  env.apply(p);
  { env.measure() } -> std::same_as<Telemetry>;
  env.reassign_shards(moves);
};

}  // namespace hacache
