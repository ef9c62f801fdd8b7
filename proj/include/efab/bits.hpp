// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace efab {

/// Packed, fixed-length bit vector. Bit i lives in word i / 64 at position i % 64.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  std::size_t size() const noexcept { return size_; }

  bool get(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1U; }
  void set(std::size_t i, bool v) noexcept {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (v) {
      words_[i >> 6] |= mask;
    } else {
      words_[i >> 6] &= ~mask;
    }
  }
  void flip(std::size_t i) noexcept { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  /// Reads `width` (<= 64) bits starting at `pos`, LSB first.
  std::uint64_t field(std::size_t pos, unsigned width) const noexcept {
    std::uint64_t v = 0;
    for (unsigned b = 0; b < width; ++b) {
      v |= std::uint64_t{get(pos + b)} << b;
    }
    return v;
  }
  void set_field(std::size_t pos, unsigned width, std::uint64_t value) noexcept {
    for (unsigned b = 0; b < width; ++b) {
      set(pos + b, (value >> b) & 1U);
    }
  }

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace efab
