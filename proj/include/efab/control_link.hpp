// SPDX-License-Identifier: Apache-2.0
//
// Memory-mapped control protocol over an 8B10B link and the ASIC register map.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "efab/fabric_model.hpp"
#include "efab/fabric_sim.hpp"
#include "efab/line_codes.hpp"

namespace efab {

enum class Opcode : std::uint8_t { Read = 0x01, Write = 0x02 };

/// Wire form: opcode, address (4 octets LE), data (4 octets LE), crc8 over the first nine.
struct ControlFrame {
  Opcode opcode = Opcode::Read;
  std::uint32_t address = 0;
  std::uint32_t data = 0;
  std::uint8_t crc8 = 0;

  static ControlFrame read(std::uint32_t address);
  static ControlFrame write(std::uint32_t address, std::uint32_t data);
  std::array<std::uint8_t, 10> octets() const;
  bool crc_ok() const;
};

enum class ReplyStatus : std::uint8_t { Ok = 0, CrcError = 1, UnmappedAddress = 2, CommitFailed = 3 };

/// Wire form: status, data (4 octets LE), crc8 over the first five.
struct ReplyFrame {
  ReplyStatus status = ReplyStatus::Ok;
  std::uint32_t data = 0;
  std::uint8_t crc8 = 0;

  static ReplyFrame make(ReplyStatus status, std::uint32_t data);
  std::array<std::uint8_t, 6> octets() const;
  bool crc_ok() const;
};

namespace regs {
inline constexpr std::uint32_t kGitHash = 0x0000'0000;
inline constexpr std::uint32_t kRevision = 0x0000'0004;
inline constexpr std::uint32_t kScratch = 0x0000'0008;
inline constexpr std::uint32_t kFabricBase = 0x0001'0000;
inline constexpr std::uint32_t kControl = kFabricBase + 0x00;  // bit0 fabric reset, bit1 config enable
inline constexpr std::uint32_t kStatus = kFabricBase + 0x04;
inline constexpr std::uint32_t kBitstreamWindow = kFabricBase + 0x08;
inline constexpr std::uint32_t kUserIn0 = kFabricBase + 0x10;   // ... +0x1C
inline constexpr std::uint32_t kUserOut0 = kFabricBase + 0x20;  // ... +0x2C
inline constexpr int kUserBuses = 4;

inline constexpr std::uint32_t kControlReset = 1u << 0;
inline constexpr std::uint32_t kControlConfigEnable = 1u << 1;

inline constexpr std::uint32_t kStatusLoaded = 1u << 0;
inline constexpr std::uint32_t kStatusInReset = 1u << 1;
inline constexpr std::uint32_t kStatusCommitError = 1u << 2;
// bits 31:8 hold the number of staged bitstream octets
}  // namespace regs

std::uint32_t build_git_hash();
inline constexpr std::uint32_t kRevisionWord = 0x0001'0004;

/// Register crossbar with the version block and the eFPGA endpoint.
class RegisterMap {
 public:
  explicit RegisterMap(FabricLayout layout);

  /// Throws UnmappedAddress.
  std::uint32_t read(std::uint32_t address);
  /// Throws UnmappedAddress, or ConfigCommitFailed when config enable rises on a bad image.
  void write(std::uint32_t address, std::uint32_t data);

  /// Advances the attached fabric; user-input words drive WEST_IO inputs 0..127.
  void clock(std::uint64_t cycles = 1);

  bool fabric_loaded() const { return fabric_.has_value(); }
  FabricState& fabric();
  std::size_t staged_octets() const { return staged_.size(); }

 private:
  IoFrame input_frame() const;

  FabricLayout layout_;
  std::optional<FabricState> fabric_;
  std::vector<std::uint8_t> staged_;
  std::uint32_t scratch_ = 0;
  std::uint32_t control_ = 0;
  bool commit_error_ = false;
  std::array<std::uint32_t, regs::kUserBuses> user_in_{};
};

/// Executes one request. Throws CrcError, UnmappedAddress or ConfigCommitFailed.
ReplyFrame control_transact(const ControlFrame& frame, RegisterMap& regs);

/// 8B10B framing: K28.5, payload octets, K29.7.
std::vector<std::uint16_t> encode_control_symbols(std::span<const std::uint8_t> octets, Disparity& rd);
/// Inverse; throws MalformedFrame plus any decode error.
std::vector<std::uint8_t> decode_control_symbols(std::span<const std::uint16_t> symbols, Disparity& rd);

/// Host and ASIC ends of the control link, stepped in lock-step over one symbol lane per
/// direction. Protocol errors on the ASIC side come back as reply status codes.
class ControlLink {
 public:
  explicit ControlLink(RegisterMap& regs) : regs_(regs) {}

  /// Optional corruption hook applied to every downlink symbol (for fault tests).
  std::uint16_t (*downlink_fault)(std::uint16_t symbol, std::uint64_t index) = nullptr;

  ReplyFrame transact(const ControlFrame& frame);
  /// Convenience wrappers that raise the Errc matching a non-Ok status.
  std::uint32_t read(std::uint32_t address);
  void write(std::uint32_t address, std::uint32_t data);
  /// Streams an image through the bitstream window and pulses config enable.
  void load_bitstream(std::span<const std::uint8_t> image);

  std::uint64_t symbols_sent() const { return symbols_; }

 private:
  RegisterMap& regs_;
  Disparity host_tx_ = Disparity::Negative;
  Disparity asic_rx_ = Disparity::Negative;
  Disparity asic_tx_ = Disparity::Negative;
  Disparity host_rx_ = Disparity::Negative;
  std::uint64_t symbols_ = 0;
};

}  // namespace efab
