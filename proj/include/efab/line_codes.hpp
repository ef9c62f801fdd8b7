// SPDX-License-Identifier: Apache-2.0
//
// 8B10B and 64B66B line codes.
#pragma once

#include <array>
#include <cstdint>

namespace efab {

enum class Disparity : std::uint8_t { Negative, Positive };

/// Commonly used control characters (value = HGF EDCBA).
inline constexpr std::uint8_t kK28_5 = 0xBC;  // comma / start of control frame
inline constexpr std::uint8_t kK29_7 = 0xFD;  // end of control frame
inline constexpr std::uint8_t kK28_0 = 0x1C;

struct Encoded8b10b {
  std::uint16_t symbol = 0;  // bit 9 = a ... bit 0 = j
  Disparity rd = Disparity::Negative;
};

struct Decoded8b10b {
  std::uint8_t byte = 0;
  bool is_control = false;
  Disparity rd = Disparity::Negative;
};

/// Throws InvalidControlCode for undefined K characters.
Encoded8b10b encode_8b10b(std::uint8_t byte, bool is_control, Disparity rd);
/// Throws InvalidSymbol, or DisparityError for a symbol only legal at the other disparity.
Decoded8b10b decode_8b10b(std::uint16_t symbol, Disparity rd);
bool is_valid_control_code(std::uint8_t byte);

inline constexpr std::uint8_t kSyncData = 0b01;
inline constexpr std::uint8_t kSyncControl = 0b10;

/// 66-bit block: 2-bit sync header and 64-bit payload (octet i in bits 8i..8i+7).
struct Word66 {
  std::uint8_t header = 0;
  std::uint64_t payload = 0;
  friend bool operator==(const Word66&, const Word66&) = default;
};

struct Block64 {
  std::array<std::uint8_t, 8> octets{};
  bool is_control = false;
  friend bool operator==(const Block64&, const Block64&) = default;
};

Word66 encode_64b66b(const std::array<std::uint8_t, 8>& octets, bool is_control);
/// Throws InvalidSyncHeader for headers 0b00 and 0b11.
Block64 decode_64b66b(Word66 word);

}  // namespace efab
