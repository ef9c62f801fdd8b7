// SPDX-License-Identifier: Apache-2.0
#include "efab/fabric_model.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>

#include "efab/crc.hpp"
#include "efab/error.hpp"

namespace efab {
namespace {

struct TileInfo {
  TileKind kind;
  std::string_view name;
  TileResources res;
};

constexpr TileInfo kTileInfo[] = {
    {TileKind::Null, "NULL", {}},
    {TileKind::NTerm, "N_term", {}},
    {TileKind::STerm, "S_term", {}},
    {TileKind::Lut4AB, "LUT4AB", {kSlotsPerLogicTile, kSlotsPerLogicTile, 0, 0, 0, 0}},
    {TileKind::DspTop, "DSP_top", {0, 0, 0, 1, 0, 0}},
    {TileKind::DspBot, "DSP_bot", {0, 0, 0, 1, 0, 0}},
    {TileKind::WestIo, "WEST_IO", {0, 0, 0, 0, kIoBitsPerTile, kIoBitsPerTile}},
    {TileKind::EastIo, "EAST_IO", {0, 0, 0, 0, kIoBitsPerTile, kIoBitsPerTile}},
    {TileKind::WIo, "W_IO", {0, 0, 0, 0, 2, 2}},
    {TileKind::CpuIo, "CPU_IO", {0, 0, 0, 0, 8, 12}},
    {TileKind::RegFile, "RegFile", {0, 0, kRegFileEntries, 0, 0, 0}},
};

const TileInfo& info(TileKind kind) { return kTileInfo[static_cast<int>(kind)]; }

bool is_io_column_kind(TileKind k) {
  return k == TileKind::WestIo || k == TileKind::EastIo || k == TileKind::WIo ||
         k == TileKind::CpuIo;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

int bits_for(int count) { return std::bit_width(static_cast<unsigned>(count - 1)); }

constexpr std::string_view kCmos28 =
    "# name=cmos28\n"
    "NULL,N_term,N_term,N_term,N_term,N_term,N_term,N_term,N_term,NULL\n"
    "WEST_IO,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,DSP_top,EAST_IO\n"
    "WEST_IO,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,DSP_bot,EAST_IO\n"
    "WEST_IO,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,DSP_top,EAST_IO\n"
    "WEST_IO,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,DSP_bot,EAST_IO\n"
    "WEST_IO,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,DSP_top,EAST_IO\n"
    "WEST_IO,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,DSP_bot,EAST_IO\n"
    "WEST_IO,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,DSP_top,EAST_IO\n"
    "WEST_IO,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,DSP_bot,EAST_IO\n"
    "NULL,S_term,S_term,S_term,S_term,S_term,S_term,S_term,S_term,NULL\n";

constexpr std::string_view kCmos130 =
    "# name=cmos130\n"
    "NULL,N_term,N_term,N_term,N_term,N_term,N_term,N_term,N_term,NULL\n"
    "W_IO,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,RegFile,DSP_top,CPU_IO\n"
    "W_IO,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,NULL,DSP_bot,CPU_IO\n"
    "W_IO,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,RegFile,DSP_top,CPU_IO\n"
    "W_IO,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,NULL,DSP_bot,CPU_IO\n"
    "W_IO,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,RegFile,DSP_top,CPU_IO\n"
    "W_IO,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,NULL,DSP_bot,CPU_IO\n"
    "W_IO,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,RegFile,DSP_top,CPU_IO\n"
    "W_IO,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,LUT4AB,NULL,DSP_bot,CPU_IO\n"
    "NULL,S_term,S_term,S_term,S_term,S_term,S_term,S_term,S_term,NULL\n";

}  // namespace

std::string_view tile_name(TileKind kind) { return info(kind).name; }

std::optional<TileKind> tile_from_name(std::string_view name) {
  for (const auto& t : kTileInfo) {
    if (t.name == name) {
      return t.kind;
    }
  }
  // FABulous spells the termination tiles with their wire pattern suffix.
  if (name == "N_term_single2" || name == "N_term_single") {
    return TileKind::NTerm;
  }
  if (name == "S_term_single2" || name == "s_term_single2" || name == "S_term_single") {
    return TileKind::STerm;
  }
  return std::nullopt;
}

TileResources tile_resources(TileKind kind) { return info(kind).res; }

bool is_routable(TileKind kind) {
  switch (kind) {
    case TileKind::Lut4AB:
    case TileKind::DspTop:
    case TileKind::DspBot:
    case TileKind::WestIo:
    case TileKind::EastIo:
      return true;
    default:
      return false;
  }
}

bool is_configurable(TileKind kind) {
  return kind != TileKind::Null && kind != TileKind::NTerm && kind != TileKind::STerm;
}

SwitchGeometry switch_geometry(TileKind kind) {
  SwitchGeometry g;
  switch (kind) {
    case TileKind::Lut4AB:
      g.local_sources = kSlotsPerLogicTile;
      g.local_sinks = 4 * kSlotsPerLogicTile;
      g.prefix_bits = kSlotsPerLogicTile * kLutSlotBits;
      break;
    case TileKind::DspTop:
    case TileKind::DspBot:
      g.local_sources = kDspHalfAccBits;
      g.local_sinks = kDspOperandBits;
      g.prefix_bits = kDspModeBits;
      break;
    case TileKind::WestIo:
    case TileKind::EastIo:
      g.local_sources = kIoBitsPerTile;
      g.local_sinks = kIoBitsPerTile;
      break;
    default:
      return g;
  }
  g.select_bits = bits_for(g.num_sources());
  return g;
}

int config_width(TileKind kind) {
  if (is_routable(kind)) {
    const SwitchGeometry g = switch_geometry(kind);
    return g.prefix_bits + g.num_sinks() * g.select_bits;
  }
  switch (kind) {
    case TileKind::RegFile:
      return kRegFileEntries * 4 + 16;  // contents + port routing
    case TileKind::WIo:
      return 6;  // per bit: direction, tri-state enable, output enable
    case TileKind::CpuIo:
      return 20;
    default:
      return 0;
  }
}

ResourceCensus& ResourceCensus::operator+=(const ResourceCensus& o) {
  logic_cells += o.logic_cells;
  flip_flops += o.flip_flops;
  registers += o.registers;
  dsp_slices += o.dsp_slices;
  io_input_bits += o.io_input_bits;
  io_output_bits += o.io_output_bits;
  return *this;
}

ResourceCensus operator+(ResourceCensus a, const ResourceCensus& b) { return a += b; }

FabricLayout::FabricLayout(std::string name, int rows, int cols, std::vector<TileKind> grid)
    : name_(std::move(name)), rows_(rows), cols_(cols), grid_(std::move(grid)) {
  if (rows_ < 0 || cols_ < 0 || grid_.size() != static_cast<std::size_t>(rows_ * cols_)) {
    throw Error(Errc::RaggedGrid, "grid size does not match rows x cols");
  }
}

std::optional<TileCoord> FabricLayout::routable_neighbor(TileCoord c, Side side) const {
  static constexpr int kDr[] = {-1, 0, 1, 0};
  static constexpr int kDc[] = {0, 1, 0, -1};
  const int r = c.row + kDr[static_cast<int>(side)];
  const int col = c.col + kDc[static_cast<int>(side)];
  if (!in_bounds(r, col) || !is_routable(at(r, col))) {
    return std::nullopt;
  }
  return TileCoord{r, col};
}

std::vector<TileCoord> FabricLayout::io_tiles(TileKind kind) const {
  std::vector<TileCoord> out;
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      if (at(r, c) == kind) {
        out.push_back({r, c});
      }
    }
  }
  return out;
}

void validate_layout(const FabricLayout& layout) {
  const int rows = layout.rows();
  const int cols = layout.cols();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const TileKind k = layout.at(r, c);
      if (k == TileKind::DspTop && (r + 1 >= rows || layout.at(r + 1, c) != TileKind::DspBot)) {
        throw Error(Errc::UnpairedDspHalf,
                    "DSP_top at (" + std::to_string(r) + "," + std::to_string(c) +
                        ") has no DSP_bot below");
      }
      if (k == TileKind::DspBot && (r == 0 || layout.at(r - 1, c) != TileKind::DspTop)) {
        throw Error(Errc::UnpairedDspHalf,
                    "DSP_bot at (" + std::to_string(r) + "," + std::to_string(c) +
                        ") has no DSP_top above");
      }
    }
  }
  for (int c = 0; c < cols; ++c) {
    bool core = false;
    for (int r = 0; r < rows; ++r) {
      const TileKind k = layout.at(r, c);
      if ((k == TileKind::NTerm && r != 0) || (k == TileKind::STerm && r != rows - 1)) {
        throw Error(Errc::MissingTermination,
                    "termination tile inside the grid at (" + std::to_string(r) + "," +
                        std::to_string(c) + ")");
      }
      if (k != TileKind::Null && k != TileKind::NTerm && k != TileKind::STerm &&
          !is_io_column_kind(k)) {
        core = true;
        if (r == 0 || r == rows - 1) {
          throw Error(Errc::MissingTermination,
                      "fabric tile on the boundary row in column " + std::to_string(c));
        }
      }
    }
    if (core && (layout.at(0, c) != TileKind::NTerm || layout.at(rows - 1, c) != TileKind::STerm)) {
      throw Error(Errc::MissingTermination, "column " + std::to_string(c) +
                                                " is not terminated by N_term/S_term");
    }
  }
}

FabricLayout parse_layout(std::string_view text) {
  std::string name = "unnamed";
  std::vector<std::vector<TileKind>> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) {
      continue;
    }
    if (line.front() == '#') {
      const std::size_t eq = line.find("name=");
      if (eq != std::string_view::npos) {
        name = std::string(trim(line.substr(eq + 5)));
      }
      continue;
    }
    std::vector<TileKind> row;
    while (true) {
      const std::size_t comma = line.find(',');
      const std::string_view cell = trim(line.substr(0, comma));
      const auto kind = tile_from_name(cell);
      if (!kind) {
        throw Error(Errc::UnknownTileName,
                    "line " + std::to_string(line_no) + ": '" + std::string(cell) + "'");
      }
      row.push_back(*kind);
      if (comma == std::string_view::npos) {
        break;
      }
      line.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(Errc::RaggedGrid, "line " + std::to_string(line_no) + " has " +
                                        std::to_string(row.size()) + " tiles, expected " +
                                        std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  const int nrows = static_cast<int>(rows.size());
  const int ncols = rows.empty() ? 0 : static_cast<int>(rows.front().size());
  std::vector<TileKind> grid;
  grid.reserve(static_cast<std::size_t>(nrows * ncols));
  for (auto& r : rows) {
    grid.insert(grid.end(), r.begin(), r.end());
  }
  FabricLayout layout(std::move(name), nrows, ncols, std::move(grid));
  validate_layout(layout);
  return layout;
}

std::string render_layout(const FabricLayout& layout) {
  std::string out = "# name=" + layout.name() + "\n";
  for (int r = 0; r < layout.rows(); ++r) {
    for (int c = 0; c < layout.cols(); ++c) {
      if (c) {
        out += ',';
      }
      out += tile_name(layout.at(r, c));
    }
    out += '\n';
  }
  return out;
}

ResourceCensus census(const FabricLayout& layout) {
  ResourceCensus total;
  for (int r = 0; r < layout.rows(); ++r) {
    for (int c = 0; c < layout.cols(); ++c) {
      const TileKind k = layout.at(r, c);
      const TileResources res = tile_resources(k);
      total.logic_cells += res.logic_cells;
      total.flip_flops += res.flip_flops;
      total.registers += res.registers;
      total.io_input_bits += res.io_in;
      total.io_output_bits += res.io_out;
      if (k == TileKind::DspTop && r + 1 < layout.rows() && layout.at(r + 1, c) == TileKind::DspBot) {
        ++total.dsp_slices;
      }
    }
  }
  return total;
}

std::string_view builtin_layout_text(std::string_view name) {
  if (name == "cmos28") {
    return kCmos28;
  }
  if (name == "cmos130") {
    return kCmos130;
  }
  throw Error(Errc::InvalidArgument, "no builtin layout named '" + std::string(name) + "'");
}

FabricLayout builtin_layout(std::string_view name) { return parse_layout(builtin_layout_text(name)); }

FabricLayout load_layout(const std::string& name_or_path) {
  if (name_or_path == "cmos28" || name_or_path == "cmos130") {
    return builtin_layout(name_or_path);
  }
  std::ifstream in(name_or_path);
  if (!in) {
    throw Error(Errc::IoError, "cannot open layout file '" + name_or_path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_layout(ss.str());
}

std::uint32_t layout_digest(const FabricLayout& layout) { return crc32(render_layout(layout)); }

}  // namespace efab
