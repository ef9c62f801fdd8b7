// SPDX-License-Identifier: Apache-2.0
//
// Cycle-accurate simulation of a configured fabric.
#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "efab/bitstream.hpp"
#include "efab/fabric_model.hpp"
#include "efab/primitives.hpp"

namespace efab {

/// Parallel IO of a fabric. Bit `o * kIoBitsPerTile + b` belongs to bit b of the o-th
/// WEST_IO (resp. EAST_IO) tile in row-major order.
struct IoFrame {
  std::vector<std::uint8_t> west_in;
  std::vector<std::uint8_t> east_in;
  std::vector<std::uint8_t> west_out;
  std::vector<std::uint8_t> east_out;

  friend bool operator==(const IoFrame&, const IoFrame&) = default;
};

IoFrame make_io_frame(const FabricLayout& layout);

struct LoadOptions {
  /// Nonzero: break ties in the combinational evaluation order pseudo-randomly.
  std::uint64_t order_seed = 0;
};

class FabricState {
 public:
  /// Decodes `image` against `layout`, builds the configured routing graph and resets.
  /// Throws decode errors, NotSimulatable, InvalidConfig or CombinationalLoop.
  static FabricState load(const FabricLayout& layout, std::span<const std::uint8_t> image,
                          LoadOptions options = {});

  /// One clock cycle: settle with `in`, sample outputs, then update every register at once.
  IoFrame step(const IoFrame& in);
  /// Settled outputs for `in` without clocking or activity accounting.
  IoFrame peek(const IoFrame& in);
  void reset();

  const FabricLayout& layout() const { return *layout_; }
  const TileConfigs& config() const { return config_; }
  std::span<const std::uint8_t> ff_values() const { return ff_state_; }
  std::span<const std::uint32_t> dsp_accumulators() const { return dsp_state_; }
  std::uint64_t cycle_count() const { return cycle_; }
  std::uint64_t toggle_count() const { return toggles_; }
  std::uint64_t ff_toggle_count() const { return ff_toggles_; }
  /// Nodes evaluated every cycle after constant folding.
  std::size_t live_nodes() const { return eval_.size(); }

 private:
  FabricState() = default;
  void settle(const IoFrame& in);
  void sample(IoFrame& out) const;

  enum class Op : std::uint8_t { Mux, Lut };
  struct EvalNode {
    Op op;
    std::uint16_t truth;
    std::uint32_t out;
    std::uint32_t in[4];
  };
  struct Register {
    std::uint32_t d;  // node holding the LUT output
    std::uint32_t q;  // node exposing the register value
    std::uint32_t ff_index;
  };
  struct DspSlice {
    std::uint32_t a[kDspOperandBits];
    std::uint32_t b[kDspOperandBits];
    std::uint32_t acc[kDspAccBits];
    bool enabled;
  };

  std::shared_ptr<const FabricLayout> layout_;
  TileConfigs config_;
  std::vector<EvalNode> eval_;
  std::vector<Register> registers_;
  std::vector<DspSlice> dsps_;
  std::vector<std::uint32_t> west_in_nodes_, east_in_nodes_, west_out_nodes_, east_out_nodes_;
  std::vector<std::uint8_t> values_;
  std::vector<std::uint8_t> prev_;
  std::vector<std::uint8_t> ff_state_;
  std::vector<std::uint32_t> dsp_state_;
  std::uint64_t cycle_ = 0;
  std::uint64_t toggles_ = 0;
  std::uint64_t ff_toggles_ = 0;
};

FabricState load(const FabricLayout& layout, std::span<const std::uint8_t> image,
                 LoadOptions options = {});
IoFrame step(FabricState& state, const IoFrame& io);

struct ActivityReport {
  std::uint64_t cycles = 0;
  std::uint64_t toggles = 0;
  std::uint64_t ff_toggles = 0;
  double toggles_per_cycle_mean = 0.0;

  /// Activity power proxy: mean toggles per cycle x frequency x energy per toggle.
  double power_proxy(double frequency_hz, double energy_per_toggle = 1.0) const {
    return toggles_per_cycle_mean * frequency_hz * energy_per_toggle;
  }
};

/// Throws NoCyclesRun before the first step.
ActivityReport activity_report(const FabricState& state);

/// Minimal value-change-dump writer for single-bit signals.
class VcdWriter {
 public:
  VcdWriter(std::ostream& out, std::vector<std::string> names, const std::string& timescale = "1ns");
  void sample(std::uint64_t time, std::span<const std::uint8_t> values);

 private:
  std::ostream& out_;
  std::vector<std::string> ids_;
  std::vector<std::uint8_t> last_;
  bool first_ = true;
};

}  // namespace efab
