#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "hacache/error.hpp"

namespace hacache::sim {

using Rng = std::mt19937_64;

/// Unbiased-enough index in [0, n) by 128-bit multiply-shift; unlike the
/// standard distributions it yields the same sequence on every platform.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  __extension__ using u128 = unsigned __int128;
  return static_cast<std::uint64_t>((static_cast<u128>(rng()) * n) >> 64);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

enum class Pattern { uniform_random, hotspot, sequential };

inline std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::uniform_random: return "uniform";
    case Pattern::hotspot: return "hotspot";
    case Pattern::sequential: return "sequential";
  }
  return "?";
}

inline Pattern parse_pattern(std::string_view s) {
  if (s == "uniform" || s == "uniform_random") return Pattern::uniform_random;
  if (s == "hotspot") return Pattern::hotspot;
  if (s == "sequential") return Pattern::sequential;
  throw ConfigError("unknown workload pattern '" + std::string(s) +
                    "' (valid: uniform, hotspot, sequential)");
}

struct WorkloadSpec {
  std::uint32_t block_size = 128 * 1024;
  std::uint64_t io_range = std::uint64_t{128} * 1024 * 131072;  ///< bytes
  Pattern pattern = Pattern::uniform_random;
  double hot_space_frac = 0.05;
  double hot_access_frac = 0.95;
  std::uint32_t threads = 16;
  std::uint32_t queue_depth = 64;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> request_limit;  ///< total requests; unset = unbounded

  std::uint64_t block_count() const { return io_range / block_size; }
  std::uint64_t outstanding() const { return std::uint64_t{threads} * queue_depth; }

  void validate() const {
    if (block_size == 0 || io_range == 0 || io_range % block_size != 0) {
      throw ConfigError("block size must divide the I/O range");
    }
    if (block_count() > (std::uint64_t{1} << 31)) throw ConfigError("I/O range too large");
    if (pattern == Pattern::hotspot) {
      if (!(hot_space_frac > 0.0 && hot_space_frac < 1.0) ||
          !(hot_access_frac > 0.0 && hot_access_frac < 1.0)) {
        throw ConfigError("hotspot fractions must be in (0,1)");
      }
    }
  }
};

/// Block address generator for one workload.
///
/// The hotspot's hot set is the prefix of a seeded permutation of the block
/// space, so hot blocks are scattered over every stripe. When a drive map is
/// given, the permutation deals blocks from each drive in turn, so any prefix
/// (and hence the hot set) is split across drives to within one block.
class BlockStream {
 public:
  using DriveMap = std::function<std::size_t(std::uint64_t)>;

  explicit BlockStream(const WorkloadSpec& spec, std::size_t drives = 0, const DriveMap& drive_of = {})
      : spec_(spec), blocks_(spec.block_count()) {
    spec_.validate();
    if (spec_.pattern == Pattern::hotspot) {
      hot_ = std::max<std::uint64_t>(
          1, static_cast<std::uint64_t>(std::llround(spec_.hot_space_frac * static_cast<double>(blocks_))));
      hot_ = std::min(hot_, blocks_ - 1);
      perm_.resize(blocks_);
      for (std::uint64_t i = 0; i < blocks_; ++i) perm_[i] = static_cast<std::uint32_t>(i);
      Rng shuffle(spec_.seed ^ 0x9e3779b97f4a7c15ULL);
      for (std::uint64_t i = blocks_ - 1; i > 0; --i) {
        std::swap(perm_[i], perm_[uniform_index(shuffle, i + 1)]);
      }
      if (drives > 1 && drive_of) deal(drives, drive_of);
    }
  }

  std::uint64_t block_count() const { return blocks_; }
  std::uint64_t hot_blocks() const { return hot_; }

  /// True if `block` is in the hot set (hotspot pattern only).
  bool is_hot(std::uint64_t block) const {
    if (spec_.pattern != Pattern::hotspot) return false;
    if (rank_.empty()) {
      rank_.assign(blocks_, 0);
      for (std::uint64_t k = 0; k < blocks_; ++k) rank_[perm_[k]] = static_cast<std::uint32_t>(k);
    }
    return rank_[block] < hot_;
  }

  std::uint64_t next(Rng& rng) {
    switch (spec_.pattern) {
      case Pattern::uniform_random:
        return uniform_index(rng, blocks_);
      case Pattern::hotspot: {
        const bool hot = uniform01(rng) < spec_.hot_access_frac;
        const std::uint64_t k = hot ? uniform_index(rng, hot_) : hot_ + uniform_index(rng, blocks_ - hot_);
        return perm_[k];
      }
      case Pattern::sequential: {
        const std::uint64_t b = cursor_;
        cursor_ = (cursor_ + 1) % blocks_;
        return b;
      }
    }
    return 0;
  }

 private:
  void deal(std::size_t drives, const DriveMap& drive_of) {
    std::vector<std::vector<std::uint32_t>> per(drives);
    for (auto b : perm_) per[drive_of(b)].push_back(b);
    std::vector<std::size_t> pos(drives, 0);
    std::uint64_t k = 0;
    while (k < blocks_) {
      for (std::size_t d = 0; d < drives; ++d) {
        if (pos[d] < per[d].size()) perm_[k++] = per[d][pos[d]++];
      }
    }
  }

  WorkloadSpec spec_;
  std::uint64_t blocks_;
  std::uint64_t hot_ = 0;
  std::uint64_t cursor_ = 0;
  std::vector<std::uint32_t> perm_;
  mutable std::vector<std::uint32_t> rank_;
};

}  // namespace hacache::sim
