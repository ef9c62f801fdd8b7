// SPDX-License-Identifier: Apache-2.0
//
// 64B66B streaming frames with CRC-32 and the PRBS loopback harness.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "efab/cad_flow.hpp"
#include "efab/error.hpp"
#include "efab/fabric_sim.hpp"
#include "efab/line_codes.hpp"

namespace efab {

inline constexpr std::size_t kDefaultMaxPayload = 8192;
inline constexpr std::uint8_t kSofBlockType = 0x78;
inline constexpr std::uint8_t kEofBlockType = 0xFD;

/// SOF control block, ceil(n/8) zero-padded data blocks, EOF control block carrying the
/// number of valid octets in the last data block and crc32(payload). Throws Oversize.
std::vector<Word66> stream_frame(std::span<const std::uint8_t> payload,
                                 std::size_t max_payload = kDefaultMaxPayload);
/// Inverse of stream_frame for exactly one frame. Throws MissingSof, MissingEof, Oversize,
/// MalformedFrame, CrcMismatch or InvalidSyncHeader.
std::vector<std::uint8_t> stream_parse(std::span<const Word66> words,
                                       std::size_t max_payload = kDefaultMaxPayload);

/// Incremental receiver: one 66-bit word per push. A completed frame yields either its
/// payload or the error that rejected it; the receiver then hunts for the next SOF.
class StreamReceiver {
 public:
  struct Event {
    std::vector<std::uint8_t> payload;
    std::optional<Errc> error;
  };

  explicit StreamReceiver(std::size_t max_payload = kDefaultMaxPayload) : max_(max_payload) {}
  std::optional<Event> push(Word66 word);

 private:
  std::size_t max_;
  bool in_frame_ = false;
  std::vector<Word66> words_;
};

/// Single payload-bit flip on the downlink: bit `bit` (octet * 8 + lsb-first) of frame `frame`.
struct FaultSpec {
  std::uint64_t frame = 0;
  std::uint64_t bit = 0;
};

/// Text schedule: one "frame bit" pair per line, '#' starts a comment. Throws ParseError.
std::vector<FaultSpec> parse_fault_schedule(std::string_view text);

struct LoopbackOptions {
  std::uint64_t frames = 1000;
  std::size_t frame_len = 256;
  std::uint64_t seed = 1;
  /// Probability that the ASIC egress asserts m_ready in a cycle.
  double ready_probability = 0.7;
  /// Half-open cycle ranges during which m_ready is forced low.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> forced_stalls;
  std::vector<FaultSpec> faults;
  /// 0 selects a budget proportional to the offered traffic.
  std::uint64_t cycle_budget = 0;
  /// Frames the host may have outstanding ahead of the ASIC ingress buffer.
  std::size_t credits = 4;
};

struct BerReport {
  std::uint64_t frames_sent = 0;
  std::uint64_t frames_received = 0;
  std::uint64_t crc_errors = 0;
  std::uint64_t payload_mismatches = 0;
  std::uint64_t bit_errors = 0;
  std::uint64_t octets_received = 0;
  std::uint64_t cycles = 0;
  std::uint64_t stall_cycles = 0;
  std::uint64_t faults_injected = 0;
  double bit_error_rate() const {
    return octets_received ? static_cast<double>(bit_errors) / (8.0 * static_cast<double>(octets_received)) : 0.0;
  }
};

/// Host -> 64B66B downlink -> ASIC RX -> fabric register stage (ready/valid) -> ASIC TX ->
/// uplink -> host RX, all advanced in lock-step. `fabric` must hold the loopback design
/// placed with loopback_pins(). Throws Deadlock when the cycle budget runs out.
BerReport run_loopback(FabricState& fabric, const LoopbackOptions& options);

}  // namespace efab
