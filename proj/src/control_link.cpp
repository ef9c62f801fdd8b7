// SPDX-License-Identifier: Apache-2.0
#include "efab/control_link.hpp"

#include <algorithm>
#include <cstdio>

#include "efab/crc.hpp"
#include "efab/error.hpp"

#ifndef EFAB_GIT_HASH
#define EFAB_GIT_HASH 0x0
#endif

namespace efab {
namespace {

void put_le32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    p[i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
}

std::uint32_t get_le32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

[[noreturn]] void unmapped(std::uint32_t address, const char* what) {
  throw Error(Errc::UnmappedAddress, std::string(what) + " of unmapped address " + hex32(address));
}

}  // namespace

std::uint32_t build_git_hash() { return static_cast<std::uint32_t>(EFAB_GIT_HASH); }

ControlFrame ControlFrame::read(std::uint32_t address) {
  ControlFrame f{Opcode::Read, address, 0, 0};
  const auto o = f.octets();
  f.crc8 = efab::crc8(std::span(o).first(9));
  return f;
}

ControlFrame ControlFrame::write(std::uint32_t address, std::uint32_t data) {
  ControlFrame f{Opcode::Write, address, data, 0};
  const auto o = f.octets();
  f.crc8 = efab::crc8(std::span(o).first(9));
  return f;
}

std::array<std::uint8_t, 10> ControlFrame::octets() const {
  std::array<std::uint8_t, 10> o{};
  o[0] = static_cast<std::uint8_t>(opcode);
  put_le32(&o[1], address);
  put_le32(&o[5], data);
  o[9] = crc8;
  return o;
}

bool ControlFrame::crc_ok() const {
  const auto o = octets();
  return efab::crc8(std::span(o).first(9)) == crc8;
}

ReplyFrame ReplyFrame::make(ReplyStatus status, std::uint32_t data) {
  ReplyFrame r{status, data, 0};
  const auto o = r.octets();
  r.crc8 = efab::crc8(std::span(o).first(5));
  return r;
}

std::array<std::uint8_t, 6> ReplyFrame::octets() const {
  std::array<std::uint8_t, 6> o{};
  o[0] = static_cast<std::uint8_t>(status);
  put_le32(&o[1], data);
  o[5] = crc8;
  return o;
}

bool ReplyFrame::crc_ok() const {
  const auto o = octets();
  return efab::crc8(std::span(o).first(5)) == crc8;
}

RegisterMap::RegisterMap(FabricLayout layout) : layout_(std::move(layout)) {}

FabricState& RegisterMap::fabric() {
  if (!fabric_) {
    throw Error(Errc::InvalidArgument, "no bitstream has been committed");
  }
  return *fabric_;
}

IoFrame RegisterMap::input_frame() const {
  IoFrame in = make_io_frame(layout_);
  for (int w = 0; w < regs::kUserBuses; ++w) {
    for (int b = 0; b < 32; ++b) {
      const auto bit = static_cast<std::size_t>(32 * w + b);
      if (bit < in.west_in.size()) {
        in.west_in[bit] = static_cast<std::uint8_t>((user_in_[static_cast<std::size_t>(w)] >> b) & 1u);
      }
    }
  }
  return in;
}

std::uint32_t RegisterMap::read(std::uint32_t address) {
  switch (address) {
    case regs::kGitHash:
      return build_git_hash();
    case regs::kRevision:
      return kRevisionWord;
    case regs::kScratch:
      return scratch_;
    case regs::kControl:
      return control_;
    case regs::kStatus:
      return (fabric_ ? regs::kStatusLoaded : 0u) | ((control_ & regs::kControlReset) ? regs::kStatusInReset : 0u) |
             (commit_error_ ? regs::kStatusCommitError : 0u) |
             static_cast<std::uint32_t>(std::min<std::size_t>(staged_.size(), 0xFFFFFF) << 8);
    case regs::kBitstreamWindow:
      return static_cast<std::uint32_t>(staged_.size());
    default:
      break;
  }
  if (address >= regs::kUserIn0 && address < regs::kUserIn0 + 4 * regs::kUserBuses && address % 4 == 0) {
    return user_in_[(address - regs::kUserIn0) / 4];
  }
  if (address >= regs::kUserOut0 && address < regs::kUserOut0 + 4 * regs::kUserBuses && address % 4 == 0) {
    if (!fabric_) {
      return 0;
    }
    const IoFrame out = fabric_->peek(input_frame());
    const std::size_t base = (address - regs::kUserOut0) / 4 * 32;
    std::uint32_t v = 0;
    for (std::size_t b = 0; b < 32 && base + b < out.west_out.size(); ++b) {
      v |= std::uint32_t{out.west_out[base + b]} << b;
    }
    return v;
  }
  unmapped(address, "read");
}

void RegisterMap::write(std::uint32_t address, std::uint32_t data) {
  switch (address) {
    case regs::kGitHash:
    case regs::kRevision:
    case regs::kStatus:
      return;  // read-only
    case regs::kScratch:
      scratch_ = data;
      return;
    case regs::kBitstreamWindow:
      for (int i = 0; i < 4; ++i) {
        staged_.push_back(static_cast<std::uint8_t>(data >> (8 * i)));
      }
      return;
    case regs::kControl: {
      const bool rising = (data & regs::kControlConfigEnable) && !(control_ & regs::kControlConfigEnable);
      control_ = data & (regs::kControlReset | regs::kControlConfigEnable);
      if (control_ & regs::kControlReset && fabric_) {
        fabric_->reset();
      }
      if (rising) {
        std::vector<std::uint8_t> image;
        image.swap(staged_);
        try {
          fabric_.emplace(FabricState::load(layout_, image));
          commit_error_ = false;
        } catch (const Error& e) {
          fabric_.reset();
          commit_error_ = true;
          throw Error(Errc::ConfigCommitFailed, e.what());
        }
      }
      return;
    }
    default:
      break;
  }
  if (address >= regs::kUserIn0 && address < regs::kUserIn0 + 4 * regs::kUserBuses && address % 4 == 0) {
    user_in_[(address - regs::kUserIn0) / 4] = data;
    return;
  }
  if (address >= regs::kUserOut0 && address < regs::kUserOut0 + 4 * regs::kUserBuses && address % 4 == 0) {
    return;  // read-only
  }
  unmapped(address, "write");
}

void RegisterMap::clock(std::uint64_t cycles) {
  if (!fabric_) {
    return;
  }
  if (control_ & regs::kControlReset) {
    fabric_->reset();
    return;
  }
  const IoFrame in = input_frame();
  for (std::uint64_t i = 0; i < cycles; ++i) {
    fabric_->step(in);
  }
}

ReplyFrame control_transact(const ControlFrame& frame, RegisterMap& regs) {
  if (!frame.crc_ok()) {
    throw Error(Errc::CrcError, "control frame crc8 mismatch");
  }
  switch (frame.opcode) {
    case Opcode::Read:
      return ReplyFrame::make(ReplyStatus::Ok, regs.read(frame.address));
    case Opcode::Write:
      regs.write(frame.address, frame.data);
      return ReplyFrame::make(ReplyStatus::Ok, frame.data);
  }
  throw Error(Errc::MalformedFrame, "unknown opcode");
}

std::vector<std::uint16_t> encode_control_symbols(std::span<const std::uint8_t> octets, Disparity& rd) {
  std::vector<std::uint16_t> out;
  out.reserve(octets.size() + 2);
  auto put = [&](std::uint8_t b, bool k) {
    const Encoded8b10b e = encode_8b10b(b, k, rd);
    out.push_back(e.symbol);
    rd = e.rd;
  };
  put(kK28_5, true);
  for (std::uint8_t b : octets) {
    put(b, false);
  }
  put(kK29_7, true);
  return out;
}

std::vector<std::uint8_t> decode_control_symbols(std::span<const std::uint16_t> symbols, Disparity& rd) {
  std::vector<std::uint8_t> out;
  bool started = false;
  for (std::uint16_t s : symbols) {
    const Decoded8b10b d = decode_8b10b(s, rd);
    rd = d.rd;
    if (d.is_control) {
      if (d.byte == kK28_5) {
        started = true;
        out.clear();
        continue;
      }
      if (d.byte == kK29_7 && started) {
        return out;
      }
      throw Error(Errc::MalformedFrame, "unexpected control character in frame");
    }
    if (!started) {
      throw Error(Errc::MalformedFrame, "data before start of frame");
    }
    out.push_back(d.byte);
  }
  throw Error(Errc::MalformedFrame, started ? "missing end of frame" : "missing start of frame");
}

ReplyFrame ControlLink::transact(const ControlFrame& frame) {
  const auto req = frame.octets();
  std::vector<std::uint16_t> wire = encode_control_symbols(req, host_tx_);
  if (downlink_fault) {
    for (std::size_t i = 0; i < wire.size(); ++i) {
      wire[i] = downlink_fault(wire[i], symbols_ + i);
    }
  }
  symbols_ += wire.size();

  ReplyFrame reply;
  try {
    const std::vector<std::uint8_t> got = decode_control_symbols(wire, asic_rx_);
    if (got.size() != req.size()) {
      throw Error(Errc::CrcError, "control frame has wrong length");
    }
    ControlFrame rx;
    rx.opcode = static_cast<Opcode>(got[0]);
    rx.address = get_le32(&got[1]);
    rx.data = get_le32(&got[5]);
    rx.crc8 = got[9];
    reply = control_transact(rx, regs_);
  } catch (const Error& e) {
    ReplyStatus st = ReplyStatus::CrcError;
    if (e.code() == Errc::UnmappedAddress) {
      st = ReplyStatus::UnmappedAddress;
    } else if (e.code() == Errc::ConfigCommitFailed) {
      st = ReplyStatus::CommitFailed;
    }
    reply = ReplyFrame::make(st, 0);
    asic_rx_ = host_tx_;  // the next comma re-aligns the receiver
  }

  const auto rep = reply.octets();
  const std::vector<std::uint16_t> up = encode_control_symbols(rep, asic_tx_);
  const std::vector<std::uint8_t> back = decode_control_symbols(up, host_rx_);
  ReplyFrame r;
  r.status = static_cast<ReplyStatus>(back.at(0));
  r.data = get_le32(&back.at(1));
  r.crc8 = back.at(5);
  if (!r.crc_ok()) {
    throw Error(Errc::CrcError, "reply frame crc8 mismatch");
  }
  return r;
}

namespace {
void raise_status(const ReplyFrame& r, std::uint32_t address) {
  switch (r.status) {
    case ReplyStatus::Ok:
      return;
    case ReplyStatus::CrcError:
      throw Error(Errc::CrcError, "request to " + hex32(address) + " rejected by crc check");
    case ReplyStatus::UnmappedAddress:
      throw Error(Errc::UnmappedAddress, "address " + hex32(address) + " is unmapped");
    case ReplyStatus::CommitFailed:
      throw Error(Errc::ConfigCommitFailed, "bitstream commit failed");
  }
  throw Error(Errc::MalformedFrame, "unknown reply status");
}
}  // namespace

std::uint32_t ControlLink::read(std::uint32_t address) {
  const ReplyFrame r = transact(ControlFrame::read(address));
  raise_status(r, address);
  return r.data;
}

void ControlLink::write(std::uint32_t address, std::uint32_t data) {
  raise_status(transact(ControlFrame::write(address, data)), address);
}

void ControlLink::load_bitstream(std::span<const std::uint8_t> image) {
  write(regs::kControl, 0);
  for (std::size_t i = 0; i < image.size(); i += 4) {
    std::uint32_t w = 0;
    for (std::size_t j = 0; j < 4 && i + j < image.size(); ++j) {
      w |= std::uint32_t{image[i + j]} << (8 * j);
    }
    write(regs::kBitstreamWindow, w);
  }
  write(regs::kControl, regs::kControlConfigEnable);
}

}  // namespace efab
