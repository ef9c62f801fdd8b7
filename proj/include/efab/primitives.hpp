// SPDX-License-Identifier: Apache-2.0
//
// Tile primitives shared by the fabric simulator and the golden netlist simulator.
#pragma once

#include <cstdint>

namespace efab {

/// Bit of `truth_table` selected by `inputs` (input 0 is the LSB of the index).
constexpr bool eval_lut4(std::uint16_t truth_table, unsigned inputs) {
  return (truth_table >> (inputs & 0xFU)) & 1U;
}

inline constexpr std::uint32_t kDspAccMask = (1U << 20) - 1;

/// Unsigned 8x8 multiply with a wrapping 20-bit accumulate.
constexpr std::uint32_t dsp_mac(std::uint8_t a, std::uint8_t b, std::uint32_t acc) {
  return (acc + std::uint32_t{a} * std::uint32_t{b}) & kDspAccMask;
}

}  // namespace efab
