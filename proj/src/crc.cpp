// SPDX-License-Identifier: Apache-2.0
#include "efab/crc.hpp"

#include <array>

namespace efab {
namespace {

constexpr std::array<std::uint32_t, 256> make_crc32_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) {
      c = (c & 1U) ? (0xEDB88320u ^ (c >> 1)) : (c >> 1);
    }
    table[i] = c;
  }
  return table;
}

constexpr std::array<std::uint8_t, 256> make_crc8_table() {
  std::array<std::uint8_t, 256> table{};
  for (unsigned i = 0; i < 256; ++i) {
    unsigned c = i;
    for (int k = 0; k < 8; ++k) {
      c = (c & 0x80U) ? ((c << 1) ^ 0x07U) : (c << 1);
    }
    table[i] = static_cast<std::uint8_t>(c);
  }
  return table;
}

constexpr auto kCrc32Table = make_crc32_table();
constexpr auto kCrc8Table = make_crc8_table();

}  // namespace

std::uint32_t crc32_update(std::uint32_t state, std::span<const std::uint8_t> data) {
  for (std::uint8_t b : data) {
    state = kCrc32Table[(state ^ b) & 0xFFU] ^ (state >> 8);
  }
  return state;
}

std::uint32_t crc32(std::span<const std::uint8_t> data) {
  return crc32_final(crc32_update(crc32_init(), data));
}

std::uint32_t crc32(std::string_view text) {
  return crc32(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::uint8_t crc8(std::span<const std::uint8_t> data) {
  std::uint8_t c = 0;
  for (std::uint8_t b : data) {
    c = kCrc8Table[c ^ b];
  }
  return c;
}

}  // namespace efab
