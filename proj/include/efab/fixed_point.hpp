// SPDX-License-Identifier: Apache-2.0
//
// Signed fixed point with 28 total bits, 19 integer bits (sign included), 9 fraction bits.
#pragma once

#include <cmath>
#include <cstdint>

#include "efab/error.hpp"

namespace efab {

struct Fixed28 {
  static constexpr int kTotalBits = 28;
  static constexpr int kFracBits = 9;
  static constexpr std::int32_t kRawMax = (1 << (kTotalBits - 1)) - 1;
  static constexpr std::int32_t kRawMin = -(1 << (kTotalBits - 1));
  static constexpr double kScale = 1 << kFracBits;

  std::int32_t raw = 0;

  static constexpr Fixed28 from_raw(std::int32_t r) { return Fixed28{r}; }

  /// Round to nearest (ties to even); throws Overflow outside the representable range.
  static Fixed28 quantize(double v) {
    const double r = std::nearbyint(v * kScale);
    if (!(r >= kRawMin && r <= kRawMax)) {
      throw Error(Errc::Overflow, "value " + std::to_string(v) + " is not representable in <28,19>");
    }
    return Fixed28{static_cast<std::int32_t>(r)};
  }

  /// Round to nearest (ties to even), saturating at the range limits. NaN maps to 0.
  static Fixed28 saturate(double v) {
    if (std::isnan(v)) {
      return Fixed28{0};
    }
    const double r = std::nearbyint(v * kScale);
    if (r >= kRawMax) {
      return Fixed28{kRawMax};
    }
    if (r <= kRawMin) {
      return Fixed28{kRawMin};
    }
    return Fixed28{static_cast<std::int32_t>(r)};
  }

  constexpr double value() const { return raw / kScale; }
  /// Low 28 bits of the two's-complement encoding.
  constexpr std::uint32_t bits() const { return static_cast<std::uint32_t>(raw) & ((1u << kTotalBits) - 1u); }

  friend constexpr bool operator==(Fixed28, Fixed28) = default;
  friend constexpr auto operator<=>(Fixed28, Fixed28) = default;
};

constexpr Fixed28 sat_add(Fixed28 a, Fixed28 b) {
  const std::int64_t s = std::int64_t{a.raw} + b.raw;
  if (s > Fixed28::kRawMax) {
    return Fixed28{Fixed28::kRawMax};
  }
  if (s < Fixed28::kRawMin) {
    return Fixed28{Fixed28::kRawMin};
  }
  return Fixed28{static_cast<std::int32_t>(s)};
}

}  // namespace efab
