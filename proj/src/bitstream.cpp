// SPDX-License-Identifier: Apache-2.0
#include "efab/bitstream.hpp"

#include <algorithm>
#include <string>

#include "efab/crc.hpp"
#include "efab/error.hpp"

namespace efab {
namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= std::uint32_t{data_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) {
      throw Error(Errc::TruncatedStream, "image ends inside a frame");
    }
  }
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

constexpr std::size_t kHeaderBytes = 12;  // magic, digest, frame count
constexpr std::size_t kTrailerBytes = 4;

}  // namespace

TileConfigs blank_configs(const FabricLayout& layout) {
  TileConfigs configs;
  for (int r = 0; r < layout.rows(); ++r) {
    for (int c = 0; c < layout.cols(); ++c) {
      const TileKind k = layout.at(r, c);
      if (is_configurable(k)) {
        configs.emplace(TileCoord{r, c}, BitVector(static_cast<std::size_t>(config_width(k))));
      }
    }
  }
  return configs;
}

std::vector<std::uint8_t> encode_bitstream(const FabricLayout& layout, const TileConfigs& configs) {
  std::vector<std::uint8_t> out(kBitstreamMagic.begin(), kBitstreamMagic.end());
  put_u32(out, layout_digest(layout));
  const std::size_t count_pos = out.size();
  put_u32(out, 0);

  std::uint32_t frames = 0;
  for (int r = 0; r < layout.rows(); ++r) {
    for (int c = 0; c < layout.cols(); ++c) {
      const TileKind k = layout.at(r, c);
      if (!is_configurable(k)) {
        continue;
      }
      const auto it = configs.find({r, c});
      if (it == configs.end()) {
        throw Error(Errc::MissingTileConfig, "no payload for tile (" + std::to_string(r) + "," +
                                                 std::to_string(c) + ")");
      }
      const BitVector& payload = it->second;
      const auto width = static_cast<std::size_t>(config_width(k));
      if (payload.size() != width) {
        throw Error(Errc::WidthMismatch, "tile (" + std::to_string(r) + "," + std::to_string(c) +
                                             ") " + std::string(tile_name(k)) + " expects " +
                                             std::to_string(width) + " bits, got " +
                                             std::to_string(payload.size()));
      }
      put_u16(out, static_cast<std::uint16_t>(r));
      put_u16(out, static_cast<std::uint16_t>(c));
      put_u32(out, static_cast<std::uint32_t>(width));
      for (std::size_t w = 0; w < (width + 31) / 32; ++w) {
        const std::size_t pos = w * 32;
        put_u32(out, static_cast<std::uint32_t>(
                         payload.field(pos, static_cast<unsigned>(std::min<std::size_t>(32, width - pos)))));
      }
      ++frames;
    }
  }
  for (const auto& [coord, payload] : configs) {
    if (!layout.in_bounds(coord.row, coord.col) || !is_configurable(layout.at(coord))) {
      throw Error(Errc::WidthMismatch, "payload for non-configurable tile (" +
                                           std::to_string(coord.row) + "," +
                                           std::to_string(coord.col) + ")");
    }
  }
  for (int i = 0; i < 4; ++i) {
    out[count_pos + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(frames >> (8 * i));
  }
  put_u32(out, crc32(out));
  return out;
}

TileConfigs decode_bitstream(std::span<const std::uint8_t> image, const FabricLayout& layout) {
  if (image.size() >= kBitstreamMagic.size() &&
      !std::equal(kBitstreamMagic.begin(), kBitstreamMagic.end(), image.begin())) {
    throw Error(Errc::BadMagic, "image does not start with \"eFAB\"");
  }
  if (image.size() < kHeaderBytes + kTrailerBytes) {
    throw Error(Errc::TruncatedStream, "image shorter than header and trailer");
  }
  const auto body = image.first(image.size() - kTrailerBytes);
  Reader trailer(image.last(kTrailerBytes));
  const std::uint32_t stored_crc = trailer.u32();
  if (crc32(body) != stored_crc) {
    throw Error(Errc::CrcMismatch, "trailer CRC does not match image contents");
  }

  Reader in(body.subspan(kBitstreamMagic.size()));
  if (in.u32() != layout_digest(layout)) {
    throw Error(Errc::DigestMismatch, "bitstream was built for a different layout than '" +
                                          layout.name() + "'");
  }
  const std::uint32_t frame_count = in.u32();

  TileConfigs configs;
  auto expected = blank_configs(layout);
  if (frame_count != expected.size()) {
    throw Error(Errc::MalformedFrame, "frame count " + std::to_string(frame_count) +
                                          " does not cover the layout's " +
                                          std::to_string(expected.size()) + " tiles");
  }
  for (auto& [coord, blank] : expected) {
    const int row = in.u16();
    const int col = in.u16();
    if (row != coord.row || col != coord.col) {
      throw Error(Errc::MalformedFrame, "frame for (" + std::to_string(row) + "," +
                                            std::to_string(col) + ") out of order");
    }
    const std::uint32_t width = in.u32();
    if (width != blank.size()) {
      throw Error(Errc::WidthMismatch, "frame width " + std::to_string(width) + " for a " +
                                           std::string(tile_name(layout.at(coord))) + " tile");
    }
    BitVector payload(width);
    for (std::size_t w = 0; w < (width + 31) / 32; ++w) {
      const std::size_t pos = w * 32;
      const auto nbits = static_cast<unsigned>(std::min<std::size_t>(32, width - pos));
      const std::uint32_t word = in.u32();
      if (nbits < 32 && (word >> nbits) != 0) {
        throw Error(Errc::MalformedFrame, "nonzero padding bits in frame");
      }
      payload.set_field(pos, nbits, word);
    }
    configs.emplace(coord, std::move(payload));
  }
  if (in.remaining() != 0) {
    throw Error(Errc::MalformedFrame, "trailing bytes after the last frame");
  }
  return configs;
}

LutSlotConfig lut_slot(const BitVector& payload, int slot) {
  const auto pos = static_cast<std::size_t>(slot * kLutSlotBits);
  return {static_cast<std::uint16_t>(payload.field(pos, 16)), payload.get(pos + 16)};
}

void set_lut_slot(BitVector& payload, int slot, LutSlotConfig cfg) {
  const auto pos = static_cast<std::size_t>(slot * kLutSlotBits);
  payload.set_field(pos, 16, cfg.truth_table);
  payload.set(pos + 16, cfg.registered);
}

int mux_select(const BitVector& payload, TileKind kind, int sink) {
  const SwitchGeometry g = switch_geometry(kind);
  return static_cast<int>(payload.field(static_cast<std::size_t>(g.select_offset(sink)),
                                        static_cast<unsigned>(g.select_bits)));
}

void set_mux_select(BitVector& payload, TileKind kind, int sink, int source) {
  const SwitchGeometry g = switch_geometry(kind);
  payload.set_field(static_cast<std::size_t>(g.select_offset(sink)),
                    static_cast<unsigned>(g.select_bits), static_cast<std::uint64_t>(source));
}

}  // namespace efab
