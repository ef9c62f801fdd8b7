// SPDX-License-Identifier: Apache-2.0
#include "efab/stream_link.hpp"

#include <gtest/gtest.h>

#include <random>

#include "efab/crc.hpp"
#include "efab/designs.hpp"
#include "test_util.hpp"

using namespace efab;

namespace {

std::vector<std::uint8_t> random_payload(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::uint8_t> p(n);
  for (auto& b : p) {
    b = static_cast<std::uint8_t>(rng());
  }
  return p;
}

const std::vector<std::uint8_t>& loopback_image() {
  static const std::vector<std::uint8_t> img = [] {
    FlowOptions o;
    o.place.pins = loopback_pins();
    return run_flow(loopback_design(), builtin_layout("cmos28"), o).image;
  }();
  return img;
}

BerReport loopback(LoopbackOptions o) {
  FabricState s = FabricState::load(builtin_layout("cmos28"), loopback_image());
  return run_loopback(s, o);
}

}  // namespace

TEST(StreamFrame, RoundTripRandomLengths) {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = i < 20 ? static_cast<std::size_t>(i) : rng() % (kDefaultMaxPayload + 1);
    const auto p = random_payload(rng, n);
    EXPECT_EQ(stream_parse(stream_frame(p)), p) << n;
  }
  const auto full = random_payload(rng, kDefaultMaxPayload);
  EXPECT_EQ(stream_parse(stream_frame(full)), full);
}

TEST(StreamFrame, Layout) {
  std::mt19937_64 rng(1);
  const auto p = random_payload(rng, 256);
  const auto w = stream_frame(p);
  ASSERT_EQ(w.size(), 34u);
  EXPECT_EQ(w.front().header, kSyncControl);
  EXPECT_EQ(w.front().payload & 0xFF, kSofBlockType);
  EXPECT_EQ(w.back().header, kSyncControl);
  EXPECT_EQ(w.back().payload & 0xFF, kEofBlockType);
  for (std::size_t i = 1; i + 1 < w.size(); ++i) {
    EXPECT_EQ(w[i].header, kSyncData);
  }
  EXPECT_EQ(w[1].payload & 0xFF, p[0]);
  EXPECT_EQ(stream_frame({}).size(), 2u);
  EXPECT_EQ(stream_frame(std::span(p).first(9)).size(), 4u);
}

TEST(StreamFrame, EverySingleBitFlipRejected) {
  std::mt19937_64 rng(2);
  for (std::size_t n : {40u, 37u}) {  // with and without padding in the last block
    const auto w = stream_frame(random_payload(rng, n));
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (int b = 0; b < 64; ++b) {
        auto bad = w;
        bad[i].payload ^= std::uint64_t{1} << b;
        EXPECT_THROW(stream_parse(bad), Error) << n << " " << i << ":" << b;
      }
    }
  }
  auto bad = stream_frame(random_payload(rng, 40));
  bad[2].payload ^= 0x10;
  EXPECT_ERRC(stream_parse(bad), Errc::CrcMismatch);
}

TEST(StreamFrame, StructuralErrors) {
  const std::vector<std::uint8_t> p(20, 0xAA);
  const auto w = stream_frame(p);
  EXPECT_ERRC(stream_parse(std::span(w).subspan(1)), Errc::MissingSof);
  EXPECT_ERRC(stream_parse(std::span(w).first(w.size() - 1)), Errc::MissingEof);
  auto hdr = w;
  hdr[1].header = 0b11;
  EXPECT_ERRC(stream_parse(hdr), Errc::InvalidSyncHeader);
  EXPECT_ERRC(stream_frame(std::vector<std::uint8_t>(kDefaultMaxPayload + 1)), Errc::Oversize);
  EXPECT_ERRC(stream_parse(w, 10), Errc::Oversize);
}

TEST(StreamReceiver, DeliversFramesAndResynchronises) {
  std::mt19937_64 rng(3);
  const auto a = random_payload(rng, 100);
  const auto b = random_payload(rng, 7);
  StreamReceiver rx;
  std::vector<StreamReceiver::Event> events;
  auto feed = [&](const std::vector<Word66>& words) {
    for (const Word66& w : words) {
      if (auto e = rx.push(w)) {
        events.push_back(*e);
      }
    }
  };
  feed({encode_64b66b({1, 2, 3, 4, 5, 6, 7, 8}, false)});  // idle garbage before any SOF
  feed(stream_frame(a));
  auto corrupt = stream_frame(b);
  corrupt[1].payload ^= 1;
  feed(corrupt);
  feed(stream_frame(b));
  ASSERT_EQ(events.size(), 3u);
  EXPECT_EQ(events[0].payload, a);
  EXPECT_FALSE(events[0].error);
  EXPECT_EQ(events[1].error, Errc::CrcMismatch);
  EXPECT_EQ(events[2].payload, b);
}

TEST(FaultSchedule, Parse) {
  const auto f = parse_fault_schedule("# frame bit\n7 100\n\n  12 3  # trailing\n");
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].frame, 7u);
  EXPECT_EQ(f[0].bit, 100u);
  EXPECT_EQ(f[1].frame, 12u);
  EXPECT_ERRC(parse_fault_schedule("7\n"), Errc::ParseError);
  EXPECT_ERRC(parse_fault_schedule("a b\n"), Errc::ParseError);
  EXPECT_TRUE(parse_fault_schedule("").empty());
}

TEST(Loopback, ThousandCleanFrames) {
  const BerReport r = loopback({});
  EXPECT_EQ(r.frames_sent, 1000u);
  EXPECT_EQ(r.frames_received, 1000u);
  EXPECT_EQ(r.crc_errors, 0u);
  EXPECT_EQ(r.payload_mismatches, 0u);
  EXPECT_EQ(r.bit_errors, 0u);
  EXPECT_EQ(r.octets_received, 256000u);
  EXPECT_GT(r.stall_cycles, 0u);
}

TEST(Loopback, InjectedFaultHitsExactlyOneFrame) {
  LoopbackOptions o;
  o.faults = {{7, 100}};
  const BerReport r = loopback(o);
  EXPECT_EQ(r.faults_injected, 1u);
  EXPECT_EQ(r.crc_errors, 1u);
  EXPECT_EQ(r.frames_received, 999u);
  EXPECT_EQ(r.payload_mismatches, 0u);
}

TEST(Loopback, ForcedStallLosesNothing) {
  LoopbackOptions o;
  o.frames = 50;
  o.ready_probability = 1.0;
  o.forced_stalls = {{40, 50}};
  const BerReport r = loopback(o);
  EXPECT_EQ(r.frames_received, 50u);
  EXPECT_EQ(r.crc_errors, 0u);
  EXPECT_GE(r.stall_cycles, 10u);
}

TEST(Loopback, EmptyFramesAndNoReady) {
  LoopbackOptions o;
  o.frames = 20;
  o.frame_len = 0;
  EXPECT_EQ(loopback(o).frames_received, 20u);
  LoopbackOptions stuck;
  stuck.frames = 5;
  stuck.ready_probability = 0.0;
  EXPECT_ERRC(loopback(stuck), Errc::Deadlock);
}

TEST(Loopback, DeterministicForSeed) {
  LoopbackOptions o;
  o.frames = 100;
  o.seed = 42;
  const BerReport a = loopback(o);
  const BerReport b = loopback(o);
  EXPECT_EQ(a.cycles, b.cycles);
  EXPECT_EQ(a.stall_cycles, b.stall_cycles);
}
