// SPDX-License-Identifier: Apache-2.0
//
// Tile taxonomy, fabric geometry and resource census.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace efab {

// Routing architecture shared by the simulator and the CAD flow.
inline constexpr int kSlotsPerLogicTile = 8;   // LUT4 + FF pairs per LUT4AB
inline constexpr int kChannelWidth = 32;       // unidirectional tracks per side per direction
inline constexpr int kIoBitsPerTile = 32;      // input and output bits per WEST_IO / EAST_IO
inline constexpr int kDspOperandBits = 8;
inline constexpr int kDspAccBits = 20;
inline constexpr int kDspHalfAccBits = kDspAccBits / 2;
inline constexpr int kRegFileEntries = 32;

enum class TileKind : std::uint8_t {
  Null,
  NTerm,
  STerm,
  Lut4AB,
  DspTop,
  DspBot,
  WestIo,
  EastIo,
  WIo,
  CpuIo,
  RegFile,
};

inline constexpr std::array kAllTileKinds = {
    TileKind::Null,  TileKind::NTerm,  TileKind::STerm, TileKind::Lut4AB,
    TileKind::DspTop, TileKind::DspBot, TileKind::WestIo, TileKind::EastIo,
    TileKind::WIo,   TileKind::CpuIo,  TileKind::RegFile,
};

enum class Side : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

inline constexpr Side opposite(Side s) { return static_cast<Side>((static_cast<int>(s) + 2) % 4); }

/// Per-tile resource contribution. DSP halves only count as a slice when paired.
struct TileResources {
  int logic_cells = 0;
  int flip_flops = 0;
  int registers = 0;  // register-file entries
  int dsp_halves = 0;
  int io_in = 0;
  int io_out = 0;
};

std::string_view tile_name(TileKind kind);
std::optional<TileKind> tile_from_name(std::string_view name);
TileResources tile_resources(TileKind kind);

/// True for tiles that carry a switch matrix and take part in simulation.
bool is_routable(TileKind kind);
/// True for every tile that receives a configuration frame.
bool is_configurable(TileKind kind);

/// Switch-matrix geometry of a routable tile.
///
/// Mux source numbering: 0 = constant 0, 1 = constant 1,
/// 2 + side * kChannelWidth + track = incoming track from `side`,
/// 2 + 4 * kChannelWidth + j = local source j (slot output, DSP accumulator bit, IO input bit).
///
/// Mux sink numbering (payload order): local sinks first (LUT pins slot-major, DSP operand
/// bits, IO output bits), then outgoing tracks side * kChannelWidth + track.
struct SwitchGeometry {
  int local_sources = 0;
  int local_sinks = 0;
  int select_bits = 0;
  int prefix_bits = 0;  // per-tile fields that precede the mux selects

  int num_sources() const { return 2 + 4 * kChannelWidth + local_sources; }
  int num_sinks() const { return local_sinks + 4 * kChannelWidth; }
  static constexpr int track_source(Side side, int track) {
    return 2 + static_cast<int>(side) * kChannelWidth + track;
  }
  static constexpr int local_source_base() { return 2 + 4 * kChannelWidth; }
  int track_sink(Side side, int track) const {
    return local_sinks + static_cast<int>(side) * kChannelWidth + track;
  }
  int select_offset(int sink) const { return prefix_bits + sink * select_bits; }
};

SwitchGeometry switch_geometry(TileKind kind);

/// Number of configuration bits a tile of this kind consumes.
int config_width(TileKind kind);

// LUT4AB prefix layout: per slot, 16-bit truth table then one "registered" bit.
inline constexpr int kLutSlotBits = 17;
// DSP_top prefix: bit 0 enable, bit 1 signed mode (reserved, must be 0). DSP_bot: two reserved.
inline constexpr int kDspModeBits = 2;

struct ResourceCensus {
  int logic_cells = 0;
  int flip_flops = 0;
  int registers = 0;
  int dsp_slices = 0;
  int io_input_bits = 0;
  int io_output_bits = 0;

  friend bool operator==(const ResourceCensus&, const ResourceCensus&) = default;
  ResourceCensus& operator+=(const ResourceCensus& o);
};

ResourceCensus operator+(ResourceCensus a, const ResourceCensus& b);

struct TileCoord {
  int row = 0;
  int col = 0;
  friend bool operator==(const TileCoord&, const TileCoord&) = default;
  friend auto operator<=>(const TileCoord&, const TileCoord&) = default;
};

class FabricLayout {
 public:
  FabricLayout() = default;
  FabricLayout(std::string name, int rows, int cols, std::vector<TileKind> grid);

  const std::string& name() const { return name_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  TileKind at(int row, int col) const { return grid_[static_cast<std::size_t>(row * cols_ + col)]; }
  TileKind at(TileCoord c) const { return at(c.row, c.col); }
  bool in_bounds(int row, int col) const { return row >= 0 && col >= 0 && row < rows_ && col < cols_; }
  const std::vector<TileKind>& grid() const { return grid_; }

  /// Neighbor in direction `side`, if it exists and is routable.
  std::optional<TileCoord> routable_neighbor(TileCoord c, Side side) const;

  /// IO tiles of the given kind in row-major order; position in this list is the tile's
  /// ordinal inside the west/east IoFrame vectors.
  std::vector<TileCoord> io_tiles(TileKind kind) const;

  friend bool operator==(const FabricLayout&, const FabricLayout&) = default;

 private:
  std::string name_;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<TileKind> grid_;
};

/// Parses and validates a comma-separated layout. Throws efab::Error.
FabricLayout parse_layout(std::string_view text);
/// Canonical text form; parse_layout(render_layout(l)) == l.
std::string render_layout(const FabricLayout& layout);
/// Checks the structural invariants, throwing the first violation found.
void validate_layout(const FabricLayout& layout);

ResourceCensus census(const FabricLayout& layout);

/// Layouts shipped with the library: "cmos28" (executable) and "cmos130" (census only).
std::string_view builtin_layout_text(std::string_view name);
FabricLayout builtin_layout(std::string_view name);
/// Accepts a builtin name or a path to a layout file.
FabricLayout load_layout(const std::string& name_or_path);

std::uint32_t layout_digest(const FabricLayout& layout);

}  // namespace efab
