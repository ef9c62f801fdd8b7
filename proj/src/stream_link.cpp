// SPDX-License-Identifier: Apache-2.0
#include "efab/stream_link.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <map>
#include <random>
#include <sstream>

#include "efab/crc.hpp"
#include "efab/designs.hpp"
#include "efab/error.hpp"
#include "efab/prbs.hpp"

namespace efab {
namespace {

Word66 control_block(std::uint8_t type, std::uint8_t count, std::uint32_t crc) {
  std::array<std::uint8_t, 8> o{};
  o[0] = type;
  o[1] = count;
  for (int i = 0; i < 4; ++i) {
    o[static_cast<std::size_t>(2 + i)] = static_cast<std::uint8_t>(crc >> (8 * i));
  }
  return encode_64b66b(o, true);
}

void check_size(std::size_t n, std::size_t max) {
  if (n > max) {
    throw Error(Errc::Oversize, "payload of " + std::to_string(n) + " octets exceeds the " +
                                    std::to_string(max) + "-octet maximum");
  }
}

}  // namespace

std::vector<Word66> stream_frame(std::span<const std::uint8_t> payload, std::size_t max_payload) {
  check_size(payload.size(), max_payload);
  std::vector<Word66> out;
  out.reserve(payload.size() / 8 + 3);
  out.push_back(control_block(kSofBlockType, 0, 0));
  std::uint8_t last = 0;
  for (std::size_t i = 0; i < payload.size(); i += 8) {
    std::array<std::uint8_t, 8> o{};
    const std::size_t n = std::min<std::size_t>(8, payload.size() - i);
    std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(i), n, o.begin());
    out.push_back(encode_64b66b(o, false));
    last = static_cast<std::uint8_t>(n);
  }
  out.push_back(control_block(kEofBlockType, last, crc32(payload)));
  return out;
}

namespace {
void require_zero(const Block64& b, std::size_t from, const char* what) {
  for (std::size_t k = from; k < b.octets.size(); ++k) {
    if (b.octets[k] != 0) {
      throw Error(Errc::MalformedFrame, std::string("reserved octet set in ") + what + " block");
    }
  }
}
}  // namespace

std::vector<std::uint8_t> stream_parse(std::span<const Word66> words, std::size_t max_payload) {
  if (words.empty()) {
    throw Error(Errc::MissingSof, "empty block sequence");
  }
  const Block64 sof = decode_64b66b(words[0]);
  if (!sof.is_control || sof.octets[0] != kSofBlockType) {
    throw Error(Errc::MissingSof, "frame does not start with a SOF block");
  }
  require_zero(sof, 1, "SOF");
  std::vector<std::uint8_t> payload;
  for (std::size_t i = 1; i < words.size(); ++i) {
    const Block64 b = decode_64b66b(words[i]);
    if (!b.is_control) {
      payload.insert(payload.end(), b.octets.begin(), b.octets.end());
      check_size(payload.size() > 8 ? payload.size() - 8 : 0, max_payload);
      continue;
    }
    if (b.octets[0] != kEofBlockType) {
      throw Error(Errc::MissingEof, "control block 0x" + std::to_string(b.octets[0]) + " inside a frame");
    }
    if (i + 1 != words.size()) {
      throw Error(Errc::MalformedFrame, "blocks after EOF");
    }
    const std::size_t data_blocks = i - 1;
    const std::size_t last = b.octets[1];
    if ((data_blocks == 0 && last != 0) || (data_blocks > 0 && (last < 1 || last > 8))) {
      throw Error(Errc::MalformedFrame, "EOF octet count " + std::to_string(last) + " is inconsistent");
    }
    require_zero(b, 6, "EOF");
    if (data_blocks > 0) {
      for (std::size_t k = payload.size() - (8 - last); k < payload.size(); ++k) {
        if (payload[k] != 0) {
          throw Error(Errc::MalformedFrame, "non-zero padding after the last payload octet");
        }
      }
      payload.resize(payload.size() - (8 - last));
    }
    check_size(payload.size(), max_payload);
    std::uint32_t crc = 0;
    for (int k = 0; k < 4; ++k) {
      crc |= std::uint32_t{b.octets[static_cast<std::size_t>(2 + k)]} << (8 * k);
    }
    if (crc32(payload) != crc) {
      throw Error(Errc::CrcMismatch, "payload crc32 mismatch");
    }
    return payload;
  }
  throw Error(Errc::MissingEof, "frame ended without an EOF block");
}

std::optional<StreamReceiver::Event> StreamReceiver::push(Word66 word) {
  if (word.header != kSyncData && word.header != kSyncControl) {
    in_frame_ = false;
    words_.clear();
    return Event{{}, Errc::InvalidSyncHeader};
  }
  const Block64 b = decode_64b66b(word);
  const bool sof = b.is_control && b.octets[0] == kSofBlockType;
  if (!in_frame_) {
    if (sof) {
      in_frame_ = true;
      words_.assign(1, word);
    }
    return std::nullopt;
  }
  if (sof) {
    // A new SOF abandons the frame in progress.
    words_.assign(1, word);
    return Event{{}, Errc::MissingEof};
  }
  words_.push_back(word);
  if (!b.is_control) {
    if ((words_.size() - 1) * 8 > max_ + 8) {
      in_frame_ = false;
      words_.clear();
      return Event{{}, Errc::Oversize};
    }
    return std::nullopt;
  }
  in_frame_ = false;
  Event ev;
  try {
    ev.payload = stream_parse(words_, max_);
  } catch (const Error& e) {
    ev.error = e.code();
  }
  words_.clear();
  return ev;
}

std::vector<FaultSpec> parse_fault_schedule(std::string_view text) {
  std::vector<FaultSpec> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream fields(line);
    FaultSpec f;
    if (!(fields >> f.frame)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) {
        continue;
      }
      throw Error(Errc::ParseError, "fault schedule line " + std::to_string(lineno) + ": expected 'frame bit'");
    }
    std::string extra;
    if (!(fields >> f.bit) || (fields >> extra)) {
      throw Error(Errc::ParseError, "fault schedule line " + std::to_string(lineno) + ": expected 'frame bit'");
    }
    out.push_back(f);
  }
  return out;
}

BerReport run_loopback(FabricState& fabric, const LoopbackOptions& opt) {
  check_size(opt.frame_len, kDefaultMaxPayload);
  std::multimap<std::uint64_t, std::uint64_t> faults;
  for (const FaultSpec& f : opt.faults) {
    if (f.bit >= opt.frame_len * 8) {
      throw Error(Errc::InvalidArgument, "fault bit offset " + std::to_string(f.bit) + " is outside the payload");
    }
    faults.emplace(f.frame, f.bit);
  }
  std::uint64_t budget = opt.cycle_budget;
  if (budget == 0) {
    const double per_frame = static_cast<double>(opt.frame_len / 4 + 2) / std::max(opt.ready_probability, 0.05);
    budget = static_cast<std::uint64_t>(4.0 * per_frame * static_cast<double>(opt.frames)) + 10'000;
    for (const auto& [a, b] : opt.forced_stalls) {
      budget += b - a;
    }
  }

  std::uint32_t prbs_seed = static_cast<std::uint32_t>((opt.seed * 0x9E3779B97F4A7C15ull) >> 33) & 0x7FFFFFFFu;
  PrbsGenerator prbs(prbs_seed ? prbs_seed : 1u);
  std::mt19937_64 rng(opt.seed ^ 0xA5A5A5A5A5A5A5A5ull);

  BerReport rep;
  std::vector<std::vector<std::uint8_t>> sent;
  std::deque<Word66> host_tx;
  std::optional<Word66> downlink;
  StreamReceiver asic_rx;
  std::uint64_t asic_rx_ordinal = 0;
  struct Pending {
    std::uint64_t ordinal;
    std::vector<std::uint64_t> words;  // 36-bit stream words
    std::size_t next = 0;
  };
  std::deque<Pending> ingress;
  std::deque<std::uint64_t> in_fabric;  // ordinals of frames inside / behind the fabric
  std::vector<std::uint8_t> egress;
  std::deque<Word66> asic_tx;
  std::deque<std::uint64_t> uplink_tags;
  std::optional<Word66> uplink;
  StreamReceiver host_rx;

  IoFrame io = make_io_frame(fabric.layout());
  if (io.west_in.size() < static_cast<std::size_t>(kLoopbackReadyBit + 1)) {
    throw Error(Errc::InvalidArgument, "layout has too few WEST_IO bits for the loopback design");
  }

  auto finished = [&] {
    return sent.size() == opt.frames && rep.frames_received + rep.crc_errors == opt.frames && host_tx.empty() &&
           !downlink && ingress.empty() && asic_tx.empty() && !uplink;
  };

  for (std::uint64_t cycle = 0;; ++cycle) {
    if (finished()) {
      rep.cycles = cycle;
      break;
    }
    if (cycle >= budget) {
      throw Error(Errc::Deadlock, "loopback did not drain within " + std::to_string(budget) + " cycles (" +
                                      std::to_string(rep.frames_received) + "/" + std::to_string(opt.frames) +
                                      " frames returned)");
    }

    // Host transmitter: start a new frame when credits allow.
    if (host_tx.empty() && sent.size() < opt.frames && ingress.size() < opt.credits) {
      std::vector<std::uint8_t> payload(opt.frame_len);
      for (auto& b : payload) {
        b = prbs.next_byte();
      }
      std::vector<Word66> words = stream_frame(payload);
      const auto [lo, hi] = faults.equal_range(sent.size());
      for (auto it = lo; it != hi; ++it) {
        words[1 + it->second / 64].payload ^= std::uint64_t{1} << (it->second % 64);
        ++rep.faults_injected;
      }
      host_tx.insert(host_tx.end(), words.begin(), words.end());
      sent.push_back(std::move(payload));
      ++rep.frames_sent;
    }

    // Downlink delivery from the previous cycle into the ASIC receiver.
    if (downlink) {
      if (auto ev = asic_rx.push(*downlink)) {
        const std::uint64_t ordinal = asic_rx_ordinal++;
        if (ev->error) {
          ++rep.crc_errors;
        } else {
          Pending p{ordinal, {}, 0};
          const auto& pl = ev->payload;
          for (std::size_t i = 0; i < pl.size() || i == 0; i += 4) {
            const std::size_t keep = std::min<std::size_t>(4, pl.size() - std::min(i, pl.size()));
            std::uint64_t w = 0;
            for (std::size_t k = 0; k < keep; ++k) {
              w |= std::uint64_t{pl[i + k]} << (8 * k);
            }
            const bool last = i + 4 >= pl.size();
            w |= std::uint64_t{last} << kStreamDataBits;
            w |= std::uint64_t{keep} << (kStreamDataBits + 1);
            p.words.push_back(w);
          }
          ingress.push_back(std::move(p));
        }
      }
      downlink.reset();
    }
    if (!host_tx.empty()) {
      downlink = host_tx.front();
      host_tx.pop_front();
    }

    // Fabric register stage.
    bool m_ready = static_cast<double>(rng() >> 11) * 0x1.0p-53 < opt.ready_probability;
    for (const auto& [a, b] : opt.forced_stalls) {
      if (cycle >= a && cycle < b) {
        m_ready = false;
      }
    }
    const bool s_valid = !ingress.empty();
    const std::uint64_t word = s_valid ? ingress.front().words[ingress.front().next] : 0;
    for (int i = 0; i < kStreamWordBits; ++i) {
      io.west_in[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((word >> i) & 1u);
    }
    io.west_in[kLoopbackValidBit] = s_valid;
    io.west_in[kLoopbackReadyBit] = m_ready;
    const IoFrame out = fabric.step(io);
    const bool s_ready = out.west_out[kLoopbackReadyBit] != 0;
    const bool m_valid = out.west_out[kLoopbackValidBit] != 0;
    if (s_valid && s_ready) {
      Pending& p = ingress.front();
      if (p.next == 0) {
        in_fabric.push_back(p.ordinal);
      }
      if (++p.next == p.words.size()) {
        ingress.pop_front();
      }
    }
    if (m_valid && !m_ready) {
      ++rep.stall_cycles;
    }
    if (m_valid && m_ready) {
      std::uint64_t w = 0;
      for (int i = 0; i < kStreamWordBits; ++i) {
        w |= std::uint64_t{out.west_out[static_cast<std::size_t>(i)]} << i;
      }
      const std::size_t keep = std::min<std::uint64_t>(4, (w >> (kStreamDataBits + 1)) & 7u);
      for (std::size_t k = 0; k < keep; ++k) {
        egress.push_back(static_cast<std::uint8_t>(w >> (8 * k)));
      }
      if ((w >> kStreamDataBits) & 1u) {
        const std::vector<Word66> words = stream_frame(egress);
        asic_tx.insert(asic_tx.end(), words.begin(), words.end());
        uplink_tags.push_back(in_fabric.front());
        in_fabric.pop_front();
        egress.clear();
      }
    }

    // Uplink delivery into the host receiver.
    if (uplink) {
      if (auto ev = host_rx.push(*uplink)) {
        const std::uint64_t tag = uplink_tags.front();
        uplink_tags.pop_front();
        if (ev->error) {
          ++rep.crc_errors;
        } else {
          ++rep.frames_received;
          rep.octets_received += ev->payload.size();
          const auto& want = sent[tag];
          std::uint64_t bits = 0;
          const std::size_t n = std::min(want.size(), ev->payload.size());
          for (std::size_t i = 0; i < n; ++i) {
            bits += static_cast<std::uint64_t>(std::popcount(static_cast<unsigned>(want[i] ^ ev->payload[i])));
          }
          bits += 8 * (std::max(want.size(), ev->payload.size()) - n);
          rep.bit_errors += bits;
          rep.payload_mismatches += bits != 0;
        }
      }
      uplink.reset();
    }
    if (!asic_tx.empty()) {
      uplink = asic_tx.front();
      asic_tx.pop_front();
    }
  }
  return rep;
}

}  // namespace efab
