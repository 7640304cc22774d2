#pragma once

// Domain types shared across the library and the analytic steady-state
// bandwidth solver.
//
// Bandwidths are MB/s (10^6 bytes per second) everywhere.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hacache/error.hpp"

namespace hacache {

/// Peak read bandwidth of a physical drive, per request granularity.
///
/// Lookups are exact: asking for a block size that was never profiled is an
/// error rather than an interpolation, because drives scale non-uniformly
/// with granularity.
class DeviceProfile {
 public:
  DeviceProfile() = default;
  DeviceProfile(std::string id, std::map<std::uint32_t, double> bandwidth_table)
      : id_(std::move(id)), table_(std::move(bandwidth_table)) {
    if (table_.empty()) {
      throw ConfigError("device '" + id_ + "': bandwidth table is empty");
    }
    for (const auto& [block, mbps] : table_) {
      if (!(mbps > 0.0) || !std::isfinite(mbps)) {
        throw ConfigError("device '" + id_ + "': bandwidth at " + std::to_string(block) +
                          " bytes must be positive");
      }
    }
  }

  const std::string& id() const { return id_; }
  const std::map<std::uint32_t, double>& bandwidth_table() const { return table_; }

  double bandwidth_at(std::uint32_t block_size) const {
    auto it = table_.find(block_size);
    if (it == table_.end()) {
      throw ConfigError("device '" + id_ + "' has no profile for block size " +
                        std::to_string(block_size));
    }
    return it->second;
  }

  bool has_block_size(std::uint32_t block_size) const { return table_.contains(block_size); }

  friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;

 private:
  std::string id_;
  std::map<std::uint32_t, double> table_;
};

/// Backend drives of the array plus the dedicated cache device.
struct ArrayTopology {
  std::vector<DeviceProfile> backends;
  DeviceProfile cache;
  std::uint64_t stripe_unit = 128 * 1024;

  void validate() const {
    if (backends.size() < 2) {
      throw ConfigError("array needs at least two backend drives, got " +
                        std::to_string(backends.size()));
    }
    if (stripe_unit < 4096 || (stripe_unit & (stripe_unit - 1)) != 0) {
      throw ConfigError("stripe unit must be a power of two >= 4096, got " +
                        std::to_string(stripe_unit));
    }
  }

  std::size_t drive_count() const { return backends.size(); }

  std::vector<double> backend_bandwidth(std::uint32_t block_size) const {
    std::vector<double> out;
    out.reserve(backends.size());
    for (const auto& d : backends) out.push_back(d.bandwidth_at(block_size));
    return out;
  }

  double cache_bandwidth(std::uint32_t block_size) const { return cache.bandwidth_at(block_size); }

  friend bool operator==(const ArrayTopology&, const ArrayTopology&) = default;
};

namespace detail {

inline void check_probabilities(std::span<const double> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) {
      throw DomainError(std::string(what) + "[" + std::to_string(i) + "] = " +
                        std::to_string(v[i]) + " is outside [0,1]");
    }
  }
}

}  // namespace detail

/// Per-drive valve values: the probability that a cache hit for drive i is
/// served by the cache rather than forwarded to the backend.
class ValveConfig {
 public:
  ValveConfig() = default;
  explicit ValveConfig(std::vector<double> p) : p_(std::move(p)) {
    detail::check_probabilities(p_, "valve");
  }
  static ValveConfig uniform(std::size_t n, double p) { return ValveConfig(std::vector<double>(n, p)); }

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const { return p_; }

  void set(std::size_t i, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("valve value outside [0,1]");
    p_.at(i) = p;
  }

  /// Elementwise equality within an absolute tolerance.
  bool near(const ValveConfig& other, double tol) const {
    if (other.size() != size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
      if (std::abs(p_[i] - other.p_[i]) > tol) return false;
    }
    return true;
  }

  friend bool operator==(const ValveConfig&, const ValveConfig&) = default;

 private:
  std::vector<double> p_;
};

/// Per-drive physical cache hit rates.
class HitProfile {
 public:
  HitProfile() = default;
  explicit HitProfile(std::vector<double> h) : h_(std::move(h)) {
    detail::check_probabilities(h_, "hit rate");
  }
  static HitProfile uniform(std::size_t n, double h) { return HitProfile(std::vector<double>(n, h)); }

  std::size_t size() const { return h_.size(); }
  double operator[](std::size_t i) const { return h_[i]; }
  std::span<const double> values() const { return h_; }

  friend bool operator==(const HitProfile&, const HitProfile&) = default;

 private:
  std::vector<double> h_;
};

/// Bandwidths forced by the striping and capacity constraints under load
/// saturation.
struct SteadyState {
  std::vector<double> b;  ///< backend bandwidth per drive
  std::vector<double> c;  ///< cache bandwidth served on behalf of each drive
  double T = 0.0;         ///< common logical bandwidth per drive
  double S = 0.0;         ///< aggregate, N * T

  double cache_total() const { return std::accumulate(c.begin(), c.end(), 0.0); }
};

/// rho_i = h_i * p_i.
inline std::vector<double> effective_diversion(const ValveConfig& p, const HitProfile& h) {
  if (p.size() != h.size()) {
    throw ConfigError("valve and hit-rate vectors differ in length (" + std::to_string(p.size()) +
                      " vs " + std::to_string(h.size()) + ")");
  }
  std::vector<double> rho(p.size());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = h[i] * p[i];
  return rho;
}

/// Largest common logical level T such that every drive serves
/// (1 - rho_i) T within its peak and the cache serves sum(rho_i) T within
/// c_max. A drive with rho_i = 1 places no backend limit on T.
inline SteadyState steady_state_solve(std::span<const double> rho, std::span<const double> b_max,
                                      double c_max) {
  if (rho.size() != b_max.size()) {
    throw ConfigError("diversion and bandwidth vectors differ in length");
  }
  if (rho.empty()) throw DomainError("steady state needs at least one drive");
  if (!(c_max >= 0.0)) throw DomainError("cache bandwidth must be >= 0");

  constexpr double inf = std::numeric_limits<double>::infinity();
  double level = inf;
  double rho_sum = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (!(rho[i] >= 0.0 && rho[i] <= 1.0)) {
      throw DomainError("diversion ratio " + std::to_string(rho[i]) + " outside [0,1]");
    }
    if (!(b_max[i] > 0.0)) throw DomainError("backend bandwidth must be > 0");
    rho_sum += rho[i];
    if (rho[i] < 1.0) level = std::min(level, b_max[i] / (1.0 - rho[i]));
  }
  if (rho_sum > 0.0) level = std::min(level, c_max / rho_sum);

  SteadyState s;
  s.T = level;
  s.b.resize(rho.size());
  s.c.resize(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    s.c[i] = rho[i] * level;
    s.b[i] = level - s.c[i];
  }
  s.S = static_cast<double>(rho.size()) * level;
  return s;
}

/// Sum of every backend peak plus the cache peak: the ceiling on S.
inline double aggregate_bound(std::span<const double> b_max, double c_max) {
  return std::accumulate(b_max.begin(), b_max.end(), 0.0) + c_max;
}

/// Drives used in the evaluation. Columns are 4 KiB random and 128 KiB
/// read bandwidth.
namespace devices {

inline constexpr std::uint32_t k4K = 4096;
inline constexpr std::uint32_t k128K = 128 * 1024;

inline DeviceProfile ssd_a() { return DeviceProfile("A", {{k4K, 1800.0}, {k128K, 3500.0}}); }
inline DeviceProfile ssd_b() { return DeviceProfile("B", {{k4K, 6350.0}, {k128K, 7100.0}}); }
inline DeviceProfile ssd_c() { return DeviceProfile("C", {{k4K, 7000.0}, {k128K, 7100.0}}); }

inline DeviceProfile by_name(const std::string& name) {
  if (name == "A") return ssd_a();
  if (name == "B") return ssd_b();
  if (name == "C") return ssd_c();
  throw ConfigError("unknown device '" + name + "' (known: A, B, C)");
}

}  // namespace devices

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"4A", "3A-1B", "2A-2B", "1A-3B", "4B"};
  return names;
}

/// "3A-1B" style names: slow A drives first, then fast B drives, with one
/// C drive as cache.
inline ArrayTopology preset_topology(const std::string& name) {
  int a = -1;
  if (name == "4A") a = 4;
  else if (name == "3A-1B") a = 3;
  else if (name == "2A-2B") a = 2;
  else if (name == "1A-3B") a = 1;
  else if (name == "4B") a = 0;
  if (a < 0) {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown topology preset '" + name + "' (valid: " + known + ")");
  }
  ArrayTopology t;
  for (int i = 0; i < 4; ++i) t.backends.push_back(i < a ? devices::ssd_a() : devices::ssd_b());
  t.cache = devices::ssd_c();
  return t;
}

inline bool is_homogeneous(std::span<const double> b_max) {
  return std::adjacent_find(b_max.begin(), b_max.end(), std::not_equal_to<>()) == b_max.end();
}

}  // namespace hacache
