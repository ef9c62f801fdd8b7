// SPDX-License-Identifier: Apache-2.0
#include "efab/line_codes.hpp"

#include <bit>
#include <cstdio>
#include <vector>

#include "efab/error.hpp"

namespace efab {
namespace {

// 5b/6b codes (abcdei, a = MSB) for the negative running disparity column.
constexpr std::array<std::uint8_t, 32> k6bNeg = {
    0b100111, 0b011101, 0b101101, 0b110001, 0b110101, 0b101001, 0b011001, 0b111000,
    0b111001, 0b100101, 0b010101, 0b110100, 0b001101, 0b101100, 0b011100, 0b010111,
    0b011011, 0b100011, 0b010011, 0b110010, 0b001011, 0b101010, 0b011010, 0b111010,
    0b110011, 0b100110, 0b010110, 0b110110, 0b001110, 0b101110, 0b011110, 0b101011,
};
constexpr std::uint8_t k6bK28Neg = 0b001111;

// 3b/4b codes (fghj, f = MSB), negative column. Index 7 is the primary D.x.7 code.
constexpr std::array<std::uint8_t, 8> k4bDataNeg = {0b1011, 0b1001, 0b0101, 0b1100,
                                                    0b1101, 0b1010, 0b0110, 0b1110};
constexpr std::uint8_t k4bAlt7Neg = 0b0111;
constexpr std::array<std::uint8_t, 8> k4bCtrlNeg = {0b1011, 0b0110, 0b1010, 0b1100,
                                                    0b1101, 0b0101, 0b1001, 0b0111};

Disparity flip_if_unbalanced(Disparity rd, unsigned code, int width) {
  if (std::popcount(code) * 2 == width) {
    return rd;
  }
  return rd == Disparity::Negative ? Disparity::Positive : Disparity::Negative;
}

std::uint8_t sub6(std::uint8_t neg, bool alternate_when_neutral, Disparity rd) {
  if (rd == Disparity::Negative) {
    return neg;
  }
  const bool flip = std::popcount(unsigned{neg}) != 3 || alternate_when_neutral;
  return flip ? static_cast<std::uint8_t>(~neg & 0x3F) : neg;
}

std::uint8_t sub4(std::uint8_t neg, bool always_flip, bool alternate_when_neutral, Disparity rd) {
  if (rd == Disparity::Negative) {
    return neg;
  }
  const bool flip = always_flip || std::popcount(unsigned{neg}) != 2 || alternate_when_neutral;
  return flip ? static_cast<std::uint8_t>(~neg & 0xF) : neg;
}

struct DecodeEntry {
  bool valid = false;
  std::uint8_t byte = 0;
  bool is_control = false;
  Disparity rd = Disparity::Negative;
};

struct DecodeTable {
  std::array<std::array<DecodeEntry, 1024>, 2> by_rd{};

  DecodeTable() {
    for (int rd = 0; rd < 2; ++rd) {
      const auto d = static_cast<Disparity>(rd);
      for (int b = 0; b < 256; ++b) {
        add(d, static_cast<std::uint8_t>(b), false);
        if (is_valid_control_code(static_cast<std::uint8_t>(b))) {
          add(d, static_cast<std::uint8_t>(b), true);
        }
      }
    }
  }

  void add(Disparity rd, std::uint8_t byte, bool k) {
    const Encoded8b10b e = encode_8b10b(byte, k, rd);
    by_rd[static_cast<std::size_t>(rd)][e.symbol] = DecodeEntry{true, byte, k, e.rd};
  }
};

const DecodeTable& decode_table() {
  static const DecodeTable table;
  return table;
}

}  // namespace

bool is_valid_control_code(std::uint8_t byte) {
  const unsigned x = byte & 0x1F;
  const unsigned y = byte >> 5;
  return x == 28 || (y == 7 && (x == 23 || x == 27 || x == 29 || x == 30));
}

Encoded8b10b encode_8b10b(std::uint8_t byte, bool is_control, Disparity rd) {
  const unsigned x = byte & 0x1F;
  const unsigned y = byte >> 5;
  if (is_control && !is_valid_control_code(byte)) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "K.%u.%u (0x%02X) is not a defined control code", x, y, byte);
    throw Error(Errc::InvalidControlCode, buf);
  }
  const std::uint8_t six = is_control && x == 28 ? sub6(k6bK28Neg, false, rd) : sub6(k6bNeg[x], x == 7, rd);
  const Disparity mid = flip_if_unbalanced(rd, six, 6);
  std::uint8_t four = 0;
  if (is_control) {
    four = sub4(k4bCtrlNeg[y], true, false, mid);
  } else if (y == 7) {
    const bool alt = (mid == Disparity::Negative && (x == 17 || x == 18 || x == 20)) ||
                     (mid == Disparity::Positive && (x == 11 || x == 13 || x == 14));
    four = alt ? sub4(k4bAlt7Neg, true, false, mid) : sub4(k4bDataNeg[7], true, false, mid);
  } else {
    four = sub4(k4bDataNeg[y], false, y == 3, mid);
  }
  return {static_cast<std::uint16_t>((six << 4) | four), flip_if_unbalanced(mid, four, 4)};
}

Decoded8b10b decode_8b10b(std::uint16_t symbol, Disparity rd) {
  const auto& t = decode_table();
  const std::size_t s = symbol & 0x3FFu;
  if (symbol > 0x3FF) {
    throw Error(Errc::InvalidSymbol, "symbol wider than 10 bits");
  }
  const DecodeEntry& e = t.by_rd[static_cast<std::size_t>(rd)][s];
  if (e.valid) {
    return {e.byte, e.is_control, e.rd};
  }
  char buf[64];
  if (t.by_rd[rd == Disparity::Negative ? 1 : 0][s].valid) {
    std::snprintf(buf, sizeof buf, "symbol 0x%03X is illegal at %s running disparity", unsigned(s),
                  rd == Disparity::Negative ? "negative" : "positive");
    throw Error(Errc::DisparityError, buf);
  }
  std::snprintf(buf, sizeof buf, "symbol 0x%03X is not in the code space", unsigned(s));
  throw Error(Errc::InvalidSymbol, buf);
}

Word66 encode_64b66b(const std::array<std::uint8_t, 8>& octets, bool is_control) {
  Word66 w;
  w.header = is_control ? kSyncControl : kSyncData;
  for (int i = 0; i < 8; ++i) {
    w.payload |= std::uint64_t{octets[static_cast<std::size_t>(i)]} << (8 * i);
  }
  return w;
}

Block64 decode_64b66b(Word66 word) {
  if (word.header != kSyncData && word.header != kSyncControl) {
    throw Error(Errc::InvalidSyncHeader, "sync header 0b" + std::to_string((word.header >> 1) & 1) +
                                             std::to_string(word.header & 1));
  }
  Block64 b;
  b.is_control = word.header == kSyncControl;
  for (int i = 0; i < 8; ++i) {
    b.octets[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(word.payload >> (8 * i));
  }
  return b;
}

}  // namespace efab
