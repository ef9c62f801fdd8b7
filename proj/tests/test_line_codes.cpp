// SPDX-License-Identifier: Apache-2.0
#include "efab/line_codes.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <random>

#include "efab/prbs.hpp"
#include "test_util.hpp"

using namespace efab;

namespace {

int ones(std::uint16_t s) { return std::popcount(static_cast<unsigned>(s & 0x3FF)); }

// Recomputes running disparity from the symbol alone.
Disparity next_rd(Disparity rd, std::uint16_t symbol) {
  const int d = 2 * ones(symbol) - 10;
  if (d == 0) {
    return rd;
  }
  return d > 0 ? Disparity::Positive : Disparity::Negative;
}

}  // namespace

// 8b10b ---------------------------------------------------------------------

TEST(Code8b10b, KnownSymbols) {
  EXPECT_EQ(encode_8b10b(0x00, false, Disparity::Negative).symbol, 0b1001110100);
  EXPECT_EQ(encode_8b10b(0x00, false, Disparity::Positive).symbol, 0b0110001011);
  EXPECT_EQ(encode_8b10b(kK28_5, true, Disparity::Negative).symbol, 0b0011111010);
  EXPECT_EQ(encode_8b10b(kK28_5, true, Disparity::Positive).symbol, 0b1100000101);
  // D21.5 is balanced and identical at both disparities.
  EXPECT_EQ(encode_8b10b(0xB5, false, Disparity::Negative).symbol, 0b1010101010);
  EXPECT_EQ(encode_8b10b(0xB5, false, Disparity::Positive).symbol, 0b1010101010);
}

TEST(Code8b10b, EverySymbolIsNearlyBalanced) {
  for (int v = 0; v < 256; ++v) {
    for (Disparity rd : {Disparity::Negative, Disparity::Positive}) {
      const Encoded8b10b e = encode_8b10b(static_cast<std::uint8_t>(v), false, rd);
      EXPECT_GE(ones(e.symbol), 4);
      EXPECT_LE(ones(e.symbol), 6);
      EXPECT_EQ(e.rd, next_rd(rd, e.symbol)) << v;
      // A non-neutral symbol always pulls the disparity back.
      if (ones(e.symbol) != 5) {
        EXPECT_NE(e.rd, rd) << v;
      }
    }
  }
}

TEST(Code8b10b, RoundTripAllBytesBothDisparities) {
  for (int v = 0; v < 256; ++v) {
    for (Disparity rd : {Disparity::Negative, Disparity::Positive}) {
      const Encoded8b10b e = encode_8b10b(static_cast<std::uint8_t>(v), false, rd);
      const Decoded8b10b d = decode_8b10b(e.symbol, rd);
      EXPECT_EQ(d.byte, v);
      EXPECT_FALSE(d.is_control);
      EXPECT_EQ(d.rd, e.rd);
    }
  }
}

TEST(Code8b10b, ControlCharacters) {
  int valid = 0;
  for (int v = 0; v < 256; ++v) {
    const auto b = static_cast<std::uint8_t>(v);
    if (!is_valid_control_code(b)) {
      EXPECT_ERRC(encode_8b10b(b, true, Disparity::Negative), Errc::InvalidControlCode);
      continue;
    }
    ++valid;
    for (Disparity rd : {Disparity::Negative, Disparity::Positive}) {
      const Encoded8b10b e = encode_8b10b(b, true, rd);
      const Decoded8b10b d = decode_8b10b(e.symbol, rd);
      EXPECT_EQ(d.byte, b);
      EXPECT_TRUE(d.is_control);
    }
  }
  EXPECT_EQ(valid, 12);
  EXPECT_TRUE(is_valid_control_code(kK28_5));
  EXPECT_TRUE(is_valid_control_code(kK29_7));
}

TEST(Code8b10b, StreamKeepsDisparityBoundedAndRunsShort) {
  std::mt19937_64 rng(4);
  Disparity rd = Disparity::Negative;
  int balance = 0;  // ones minus zeros over the whole stream
  int run = 0;
  int last = -1;
  for (int i = 0; i < 20000; ++i) {
    const bool k = i % 50 == 0;
    const auto v = k ? kK28_5 : static_cast<std::uint8_t>(rng());
    const Encoded8b10b e = encode_8b10b(v, k, rd);
    balance += 2 * ones(e.symbol) - 10;
    ASSERT_GE(balance, 0);  // starting at RD- allows one symbol of excess ones
    ASSERT_LE(balance, 2);
    for (int b = 9; b >= 0; --b) {
      const int bit = (e.symbol >> b) & 1;
      run = bit == last ? run + 1 : 1;
      last = bit;
      ASSERT_LE(run, 5);
    }
    rd = e.rd;
  }
}

TEST(Code8b10b, DecodeErrors) {
  EXPECT_ERRC(decode_8b10b(0, Disparity::Negative), Errc::InvalidSymbol);
  EXPECT_ERRC(decode_8b10b(0x3FF, Disparity::Positive), Errc::InvalidSymbol);
  // D0.0 encoded at RD- carries positive disparity; at RD+ it is illegal.
  EXPECT_ERRC(decode_8b10b(0b1001110100, Disparity::Positive), Errc::DisparityError);
}

TEST(Code8b10b, RandomSymbolsNeverDecodeSilentlyWrong) {
  // Every 10-bit pattern either fails or re-encodes to itself.
  for (std::uint16_t s = 0; s < 1024; ++s) {
    for (Disparity rd : {Disparity::Negative, Disparity::Positive}) {
      try {
        const Decoded8b10b d = decode_8b10b(s, rd);
        EXPECT_EQ(encode_8b10b(d.byte, d.is_control, rd).symbol, s);
      } catch (const Error&) {
      }
    }
  }
}

// 64b66b --------------------------------------------------------------------

TEST(Code64b66b, RoundTrip) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 1000; ++i) {
    Block64 b;
    for (auto& o : b.octets) {
      o = static_cast<std::uint8_t>(rng());
    }
    b.is_control = i % 3 == 0;
    const Word66 w = encode_64b66b(b.octets, b.is_control);
    EXPECT_EQ(w.header, b.is_control ? kSyncControl : kSyncData);
    EXPECT_EQ(decode_64b66b(w), b);
  }
}

TEST(Code64b66b, OctetOrder) {
  const Word66 w = encode_64b66b({1, 2, 3, 4, 5, 6, 7, 8}, false);
  EXPECT_EQ(w.payload, 0x0807060504030201ull);
}

TEST(Code64b66b, InvalidHeaders) {
  EXPECT_ERRC(decode_64b66b(Word66{0b00, 0}), Errc::InvalidSyncHeader);
  EXPECT_ERRC(decode_64b66b(Word66{0b11, 0}), Errc::InvalidSyncHeader);
}

// PRBS ----------------------------------------------------------------------

TEST(Prbs, Prbs7HasFullPeriodAndRecurrence) {
  const PrbsBits s = prbs_next(0x7F, 3 * 127, kPrbs7);
  for (std::size_t n = 7; n < s.bits.size(); ++n) {
    ASSERT_EQ(s.bits[n], s.bits[n - 7] ^ s.bits[n - 6]) << n;
  }
  for (std::size_t n = 0; n + 127 < s.bits.size(); ++n) {
    ASSERT_EQ(s.bits[n], s.bits[n + 127]);
  }
  int period_ones = 0;
  for (int n = 0; n < 127; ++n) {
    period_ones += s.bits[static_cast<std::size_t>(n)];
  }
  EXPECT_EQ(period_ones, 64);
  // Every non-zero state is visited once per period.
  PrbsGenerator g(0x7F, kPrbs7);
  std::vector<bool> seen(128, false);
  for (int n = 0; n < 127; ++n) {
    ASSERT_FALSE(seen[g.state()]);
    seen[g.state()] = true;
    g.next_bit();
  }
  EXPECT_EQ(g.state(), 0x7Fu);
}

TEST(Prbs, Prbs31Recurrence) {
  const PrbsBits s = prbs_next(0x12345678, 5000);
  for (std::size_t n = 31; n < s.bits.size(); ++n) {
    ASSERT_EQ(s.bits[n], s.bits[n - 31] ^ s.bits[n - 28]);
  }
}

TEST(Prbs, ResumesFromState) {
  const PrbsBits a = prbs_next(0x55, 300, kPrbs7);
  const PrbsBits first = prbs_next(0x55, 100, kPrbs7);
  const PrbsBits rest = prbs_next(first.state, 200, kPrbs7);
  std::vector<std::uint8_t> joined = first.bits;
  joined.insert(joined.end(), rest.bits.begin(), rest.bits.end());
  EXPECT_EQ(joined, a.bits);
}

TEST(Prbs, CheckerCountsEachFlipOnce) {
  const PrbsBits s = prbs_next(0x7FFFFFFF, 10000);
  EXPECT_EQ(prbs_check(s.bits), 0u);
  auto bad = s.bits;
  for (std::size_t pos : {100u, 5000u, 9999u}) {
    bad[pos] ^= 1;
  }
  EXPECT_EQ(prbs_check(bad), 3u);
}

TEST(Prbs, CheckerByteInterface) {
  PrbsGenerator g(0x1234567);
  PrbsChecker c;
  for (int i = 0; i < 1000; ++i) {
    c.push_byte(static_cast<std::uint8_t>(g.next_byte() ^ (i == 500 ? 0x81 : 0)));
  }
  EXPECT_TRUE(c.locked());
  EXPECT_EQ(c.errors(), 2u);
  EXPECT_EQ(c.checked(), 8000u - 31u);
}

TEST(Prbs, ZeroState) {
  EXPECT_ERRC(PrbsGenerator(0, kPrbs7), Errc::ZeroState);
  EXPECT_ERRC(PrbsGenerator(0x80, kPrbs7), Errc::ZeroState);  // outside the register
  const std::vector<std::uint8_t> zeros(100, 0);
  EXPECT_ERRC(prbs_check(zeros), Errc::ZeroState);
}
