#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "hacache/error.hpp"

namespace hacache::sim {

/// Read-path address mapping of a left-symmetric rotating-parity array.
///
/// Stripe s keeps parity on drive (N-1) - (s mod N); its N-1 data strips
/// follow on the next drives, wrapping around. Requests never exceed one
/// strip, so every block maps to exactly one data drive.
class StripeMap {
 public:
  StripeMap(std::size_t drives, std::uint64_t stripe_unit, std::uint32_t block_size,
            std::uint64_t block_count)
      : drives_(drives), block_count_(block_count) {
    if (drives < 2) throw ConfigError("striping needs at least two drives");
    if (block_size == 0 || stripe_unit % block_size != 0) {
      throw ConfigError("block size must divide the stripe unit");
    }
    blocks_per_strip_ = stripe_unit / block_size;
  }

  std::size_t drives() const { return drives_; }
  std::uint64_t block_count() const { return block_count_; }

  std::size_t parity_drive(std::uint64_t stripe) const {
    return (drives_ - 1) - static_cast<std::size_t>(stripe % drives_);
  }

  std::size_t drive_of(std::uint64_t block) const {
    if (block >= block_count_) {
      throw DomainError("block " + std::to_string(block) + " outside the I/O range");
    }
    const std::uint64_t strip = block / blocks_per_strip_;
    const std::uint64_t stripe = strip / (drives_ - 1);
    const std::uint64_t data_index = strip % (drives_ - 1);
    return static_cast<std::size_t>((parity_drive(stripe) + 1 + data_index) % drives_);
  }

 private:
  std::size_t drives_;
  std::uint64_t block_count_;
  std::uint64_t blocks_per_strip_ = 1;
};

}  // namespace hacache::sim
