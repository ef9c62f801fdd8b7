// SPDX-License-Identifier: Apache-2.0
//
// LUT4-level circuit IR and its golden two-phase simulator.
#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace efab {

using NetId = std::uint32_t;
using CellId = std::uint32_t;
inline constexpr NetId kNoNet = std::numeric_limits<NetId>::max();

enum class CellKind : std::uint8_t { Lut4, Dff, DspMac, InPort, OutPort, Const };

std::string_view cell_kind_name(CellKind kind);
int cell_input_count(CellKind kind);
int cell_output_count(CellKind kind);

/// DspMac pins: inputs a[0..7] then b[0..7]; outputs acc[0..19]. The accumulator is state.
struct Cell {
  CellKind kind = CellKind::Lut4;
  std::string name;
  std::uint16_t truth_table = 0;  // Lut4: bit (in0 + 2 in1 + 4 in2 + 8 in3)
  bool const_value = false;       // Const
  std::vector<NetId> inputs;
  std::vector<NetId> outputs;
};

struct PinRef {
  CellId cell = 0;
  std::uint32_t pin = 0;
  friend bool operator==(const PinRef&, const PinRef&) = default;
};

struct Net {
  std::string name;
  std::optional<PinRef> driver;
  std::vector<PinRef> sinks;
};

class Netlist {
 public:
  NetId add_net(std::string name = {});
  /// Adds a cell and wires its pins; pin vectors must already have the kind's arity.
  CellId add_cell(Cell cell);

  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<Net>& nets() const { return nets_; }
  const Cell& cell(CellId id) const { return cells_[id]; }
  const Net& net(NetId id) const { return nets_[id]; }

  /// InPort / OutPort cells in creation order; simulator valuations follow this order.
  const std::vector<CellId>& inputs() const { return inputs_; }
  const std::vector<CellId>& outputs() const { return outputs_; }

  std::optional<CellId> find_cell(std::string_view name) const;
  int count(CellKind kind) const;

  void set_truth_table(CellId id, std::uint16_t truth) { cells_[id].truth_table = truth; }

  /// Checks driver/sink structure and port-name uniqueness. Throws efab::Error.
  void validate() const;

 private:
  std::vector<Cell> cells_;
  std::vector<Net> nets_;
  std::vector<CellId> inputs_;
  std::vector<CellId> outputs_;
  std::unordered_map<std::string, CellId> by_name_;
};

std::string write_netlist(const Netlist& netlist);
Netlist read_netlist(std::string_view text);

/// Combinational levelization: Lut4 cells in an order where every input is computed first.
/// Throws CombinationalLoop.
std::vector<CellId> topological_luts(const Netlist& netlist);

/// Cycle-based golden simulator. step() settles the combinational logic for the given
/// inputs, samples the outputs, then clocks every register simultaneously.
class NetlistSimulator {
 public:
  explicit NetlistSimulator(const Netlist& netlist);

  std::vector<std::uint8_t> step(std::span<const std::uint8_t> inputs);
  /// Settled outputs for `inputs` without clocking.
  std::vector<std::uint8_t> peek(std::span<const std::uint8_t> inputs);
  void reset();
  std::uint64_t cycle() const { return cycle_; }

 private:
  void settle(std::span<const std::uint8_t> inputs);
  std::vector<std::uint8_t> sample() const;

  struct Lut {
    std::uint16_t truth;
    NetId in[4];
    NetId out;
  };
  struct Dff {
    NetId d;
    NetId q;
  };
  struct Dsp {
    NetId a[8];
    NetId b[8];
    NetId acc[20];
  };

  std::vector<Lut> luts_;
  std::vector<Dff> dffs_;
  std::vector<Dsp> dsps_;
  std::vector<std::uint8_t> dff_state_;
  std::vector<std::uint32_t> dsp_state_;
  std::vector<NetId> in_nets_;
  std::vector<NetId> out_nets_;
  std::vector<std::pair<NetId, std::uint8_t>> consts_;
  std::vector<std::uint8_t> values_;
  std::uint64_t cycle_ = 0;
};

/// Runs a whole trace from reset; one output valuation per input valuation.
std::vector<std::vector<std::uint8_t>> netlist_sim(const Netlist& netlist,
                                                   const std::vector<std::vector<std::uint8_t>>& trace);

}  // namespace efab
