// SPDX-License-Identifier: Apache-2.0
#include "efab/bitstream.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>

#include "efab/crc.hpp"
#include "test_util.hpp"

using namespace efab;

namespace {

// Bit-at-a-time reference, no tables.
std::uint32_t crc32_bitwise(std::span<const std::uint8_t> data) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::uint8_t byte : data) {
    for (int b = 0; b < 8; ++b) {
      const bool in = ((byte >> b) & 1U) != ((crc & 1U) != 0);
      crc >>= 1;
      if (in) {
        crc ^= 0xEDB88320u;
      }
    }
  }
  return ~crc;
}

std::uint8_t crc8_bitwise(std::span<const std::uint8_t> data) {
  std::uint8_t crc = 0;
  for (std::uint8_t byte : data) {
    for (int b = 7; b >= 0; --b) {
      const bool in = ((byte >> b) & 1U) != ((crc >> 7) != 0);
      crc = static_cast<std::uint8_t>(crc << 1);
      if (in) {
        crc ^= 0x07;
      }
    }
  }
  return crc;
}

const FabricLayout& tiny() {
  static const FabricLayout l = parse_layout(
      "# name=tiny\n"
      "NULL,N_term,NULL\n"
      "WEST_IO,LUT4AB,EAST_IO\n"
      "NULL,S_term,NULL\n");
  return l;
}

TileConfigs random_configs(const FabricLayout& l, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TileConfigs c = blank_configs(l);
  for (auto& [coord, bits] : c) {
    for (std::size_t i = 0; i < bits.size(); ++i) {
      bits.set(i, rng() & 1U);
    }
  }
  return c;
}

}  // namespace

TEST(Crc32, CheckValue) {
  EXPECT_EQ(crc32(std::string_view("123456789")), 0xCBF43926u);
  EXPECT_EQ(crc32(std::string_view("")), 0x00000000u);
}

TEST(Crc32, MatchesBitwiseOracle) {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 300; n += 7) {
    std::vector<std::uint8_t> d(static_cast<std::size_t>(n));
    for (auto& b : d) {
      b = static_cast<std::uint8_t>(rng());
    }
    EXPECT_EQ(crc32(d), crc32_bitwise(d)) << n;
    EXPECT_EQ(crc8(d), crc8_bitwise(d)) << n;
  }
}

TEST(Crc32, StreamingEqualsOneShot) {
  const std::string s = "the quick brown fox jumps over the lazy dog";
  const std::span<const std::uint8_t> all(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
  std::uint32_t st = crc32_init();
  st = crc32_update(st, all.first(10));
  st = crc32_update(st, all.subspan(10));
  EXPECT_EQ(crc32_final(st), crc32(all));
}

TEST(Crc32, DetectsEverySingleBitFlip) {
  std::vector<std::uint8_t> d(64);
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = static_cast<std::uint8_t>(i * 37 + 5);
  }
  const std::uint32_t ref = crc32(d);
  for (std::size_t bit = 0; bit < d.size() * 8; ++bit) {
    d[bit / 8] ^= static_cast<std::uint8_t>(1U << (bit % 8));
    EXPECT_NE(crc32(d), ref);
    d[bit / 8] ^= static_cast<std::uint8_t>(1U << (bit % 8));
  }
}

TEST(Bitstream, BlankRoundTripOnCmos28) {
  const FabricLayout l = builtin_layout("cmos28");
  const TileConfigs c = blank_configs(l);
  EXPECT_EQ(decode_bitstream(encode_bitstream(l, c), l), c);
}

TEST(Bitstream, RandomRoundTripAndDeterminism) {
  const FabricLayout l = builtin_layout("cmos28");
  const TileConfigs c = random_configs(l, 3);
  const auto a = encode_bitstream(l, c);
  EXPECT_EQ(a, encode_bitstream(l, c));
  EXPECT_EQ(decode_bitstream(a, l), c);
}

TEST(Bitstream, LayoutFields) {
  const auto img = encode_bitstream(tiny(), blank_configs(tiny()));
  ASSERT_GE(img.size(), 16u);
  EXPECT_TRUE(std::equal(kBitstreamMagic.begin(), kBitstreamMagic.end(), img.begin()));
  const std::uint32_t trailer = img[img.size() - 4] | (img[img.size() - 3] << 8) | (img[img.size() - 2] << 16) |
                                (std::uint32_t{img[img.size() - 1]} << 24);
  EXPECT_EQ(trailer, crc32_bitwise(std::span(img).first(img.size() - 4)));
  // One frame per configurable tile: WEST_IO, LUT4AB, EAST_IO.
  EXPECT_EQ(blank_configs(tiny()).size(), 3u);
  EXPECT_EQ(img[8], 3);
}

TEST(Bitstream, WidthMismatchOnEncode) {
  const FabricLayout l = tiny();
  TileConfigs c = blank_configs(l);
  auto& p = c.begin()->second;
  p = BitVector(p.size() + 1);
  EXPECT_ERRC(encode_bitstream(l, c), Errc::WidthMismatch);
}

TEST(Bitstream, MissingTileConfig) {
  const FabricLayout l = tiny();
  TileConfigs c = blank_configs(l);
  c.erase(c.begin());
  EXPECT_ERRC(encode_bitstream(l, c), Errc::MissingTileConfig);
}

TEST(Bitstream, EverySingleBitCorruptionIsDetected) {
  const FabricLayout l = tiny();
  const auto img = encode_bitstream(l, random_configs(l, 9));
  for (std::size_t bit = 0; bit < img.size() * 8; ++bit) {
    auto bad = img;
    bad[bit / 8] ^= static_cast<std::uint8_t>(1U << (bit % 8));
    EXPECT_THROW(decode_bitstream(bad, l), Error) << "bit " << bit;
  }
}

TEST(Bitstream, PayloadFlipIsCrcMismatch) {
  const FabricLayout l = builtin_layout("cmos28");
  auto img = encode_bitstream(l, blank_configs(l));
  img[img.size() / 2] ^= 0x10;
  EXPECT_ERRC(decode_bitstream(img, l), Errc::CrcMismatch);
}

TEST(Bitstream, WrongLayoutIsDigestMismatch) {
  const auto img = encode_bitstream(builtin_layout("cmos28"), blank_configs(builtin_layout("cmos28")));
  EXPECT_ERRC(decode_bitstream(img, builtin_layout("cmos130")), Errc::DigestMismatch);
}

TEST(Bitstream, HeaderErrors) {
  const FabricLayout l = tiny();
  auto img = encode_bitstream(l, blank_configs(l));
  auto bad = img;
  bad[0] = 'X';
  EXPECT_ERRC(decode_bitstream(bad, l), Errc::BadMagic);
  EXPECT_ERRC(decode_bitstream(std::span(img).first(10), l), Errc::TruncatedStream);
}

TEST(Bitstream, SlotAndMuxAccessors) {
  BitVector p(static_cast<std::size_t>(config_width(TileKind::Lut4AB)));
  set_lut_slot(p, 3, {0x6996, true});
  EXPECT_EQ(lut_slot(p, 3).truth_table, 0x6996);
  EXPECT_TRUE(lut_slot(p, 3).registered);
  EXPECT_EQ(lut_slot(p, 2).truth_table, 0);
  const SwitchGeometry g = switch_geometry(TileKind::Lut4AB);
  const int sink = g.track_sink(Side::East, 5);
  set_mux_select(p, TileKind::Lut4AB, sink, SwitchGeometry::track_source(Side::West, 7));
  EXPECT_EQ(mux_select(p, TileKind::Lut4AB, sink), SwitchGeometry::track_source(Side::West, 7));
  EXPECT_EQ(lut_slot(p, 3).truth_table, 0x6996);
}
