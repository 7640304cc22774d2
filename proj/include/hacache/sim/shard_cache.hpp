#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "hacache/error.hpp"

namespace hacache::sim {

/// Cache space cut into equal shards, each owned by one backend drive.
///
/// A drive's blocks are admitted round-robin over its shards, each shard a
/// FIFO ring, which gives FIFO eviction across the drive's shard set.
/// Moving a shard to another owner drops its contents.
class ShardCache {
 public:
  ShardCache(std::size_t drives, std::size_t shard_count, std::size_t shard_capacity,
             std::uint64_t block_count)
      : shards_(shard_count), owned_(drives), cursor_(drives, 0),
        index_(block_count, kNotCached), capacity_(shard_capacity) {
    if (drives == 0) throw ConfigError("cache needs at least one drive");
    if (shard_count == 0) throw ConfigError("cache needs at least one shard");
    for (std::size_t s = 0; s < shard_count; ++s) {
      shards_[s].owner = static_cast<int>(s % drives);
      shards_[s].ring.resize(capacity_);
      owned_[s % drives].push_back(s);
    }
  }

  std::size_t shard_count() const { return shards_.size(); }
  std::size_t shard_capacity() const { return capacity_; }
  std::size_t drive_count() const { return owned_.size(); }
  int owner(std::size_t shard) const { return shards_[shard].owner; }
  std::size_t quota(std::size_t drive) const { return owned_[drive].size(); }
  std::size_t occupancy(std::size_t shard) const { return shards_[shard].count; }

  std::vector<int> shard_owner() const {
    std::vector<int> out(shards_.size());
    for (std::size_t s = 0; s < shards_.size(); ++s) out[s] = shards_[s].owner;
    return out;
  }

  std::optional<std::size_t> lookup(std::uint64_t block) const {
    const auto s = index_[block];
    if (s == kNotCached) return std::nullopt;
    return static_cast<std::size_t>(s);
  }

  /// Insert `block` into one of `owner`'s shards, evicting that shard's
  /// oldest block when full. No-op when the owner has no capacity.
  void admit(std::uint64_t block, std::size_t owner) {
    auto& mine = owned_[owner];
    if (mine.empty() || capacity_ == 0 || index_[block] != kNotCached) return;
    const std::size_t sid = mine[cursor_[owner] % mine.size()];
    cursor_[owner] = (cursor_[owner] + 1) % mine.size();
    Shard& sh = shards_[sid];
    if (sh.count == capacity_) {
      index_[sh.ring[sh.head]] = kNotCached;
      sh.ring[sh.head] = block;
      sh.head = (sh.head + 1) % capacity_;
    } else {
      sh.ring[(sh.head + sh.count) % capacity_] = block;
      ++sh.count;
    }
    index_[block] = static_cast<std::int32_t>(sid);
  }

  void reassign(std::size_t shard, std::size_t new_owner) {
    if (shard >= shards_.size() || new_owner >= owned_.size()) {
      throw ConfigError("invalid shard reassignment");
    }
    Shard& sh = shards_[shard];
    for (std::size_t k = 0; k < sh.count; ++k) index_[sh.ring[(sh.head + k) % capacity_]] = kNotCached;
    sh.count = 0;
    sh.head = 0;
    auto& from = owned_[static_cast<std::size_t>(sh.owner)];
    from.erase(std::find(from.begin(), from.end(), shard));
    auto& to = owned_[new_owner];
    to.insert(std::lower_bound(to.begin(), to.end(), shard), shard);
    sh.owner = static_cast<int>(new_owner);
    for (std::size_t d = 0; d < owned_.size(); ++d) {
      cursor_[d] = owned_[d].empty() ? 0 : cursor_[d] % owned_[d].size();
    }
  }

  /// Walk every shard and check the index agrees with shard contents and
  /// that `maps_to(block)` names the shard's owner. Test helper.
  template <class MapFn>
  bool consistent(MapFn&& maps_to) const {
    std::size_t indexed = 0;
    for (auto s : index_) indexed += s != kNotCached;
    std::size_t stored = 0;
    for (std::size_t sid = 0; sid < shards_.size(); ++sid) {
      const Shard& sh = shards_[sid];
      for (std::size_t k = 0; k < sh.count; ++k) {
        const auto block = sh.ring[(sh.head + k) % capacity_];
        if (index_[block] != static_cast<std::int32_t>(sid)) return false;
        if (static_cast<int>(maps_to(block)) != sh.owner) return false;
        ++stored;
      }
    }
    std::size_t total_quota = 0;
    for (const auto& o : owned_) total_quota += o.size();
    return stored == indexed && total_quota == shards_.size();
  }

 private:
  static constexpr std::int32_t kNotCached = -1;

  struct Shard {
    int owner = 0;
    std::vector<std::uint64_t> ring;
    std::size_t head = 0;
    std::size_t count = 0;
  };

  std::vector<Shard> shards_;
  std::vector<std::vector<std::size_t>> owned_;
  std::vector<std::size_t> cursor_;
  std::vector<std::int32_t> index_;
  std::size_t capacity_;
};

}  // namespace hacache::sim
