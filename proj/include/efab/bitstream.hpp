// SPDX-License-Identifier: Apache-2.0
//
// Configuration image format. See docs/bitstream.md for the byte layout.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "efab/bits.hpp"
#include "efab/fabric_model.hpp"

namespace efab {

inline constexpr std::array<std::uint8_t, 4> kBitstreamMagic = {'e', 'F', 'A', 'B'};

/// Per-tile payloads keyed by tile coordinate (row-major iteration order).
using TileConfigs = std::map<TileCoord, BitVector>;

/// All-zero payload for every configurable tile of `layout`.
TileConfigs blank_configs(const FabricLayout& layout);

std::vector<std::uint8_t> encode_bitstream(const FabricLayout& layout, const TileConfigs& configs);
TileConfigs decode_bitstream(std::span<const std::uint8_t> image, const FabricLayout& layout);

// Typed accessors over a tile payload.

struct LutSlotConfig {
  std::uint16_t truth_table = 0;
  bool registered = false;
};

LutSlotConfig lut_slot(const BitVector& payload, int slot);
void set_lut_slot(BitVector& payload, int slot, LutSlotConfig cfg);

int mux_select(const BitVector& payload, TileKind kind, int sink);
void set_mux_select(BitVector& payload, TileKind kind, int sink, int source);

}  // namespace efab
