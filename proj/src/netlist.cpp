// SPDX-License-Identifier: Apache-2.0
#include "efab/netlist.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "efab/error.hpp"
#include "efab/primitives.hpp"

namespace efab {

std::string_view cell_kind_name(CellKind kind) {
  switch (kind) {
    case CellKind::Lut4:
      return "lut4";
    case CellKind::Dff:
      return "dff";
    case CellKind::DspMac:
      return "dsp";
    case CellKind::InPort:
      return "in";
    case CellKind::OutPort:
      return "out";
    case CellKind::Const:
      return "const";
  }
  return "?";
}

int cell_input_count(CellKind kind) {
  switch (kind) {
    case CellKind::Lut4:
      return 4;
    case CellKind::Dff:
    case CellKind::OutPort:
      return 1;
    case CellKind::DspMac:
      return 16;
    default:
      return 0;
  }
}

int cell_output_count(CellKind kind) {
  switch (kind) {
    case CellKind::DspMac:
      return 20;
    case CellKind::OutPort:
      return 0;
    default:
      return 1;
  }
}

NetId Netlist::add_net(std::string name) {
  const auto id = static_cast<NetId>(nets_.size());
  if (name.empty()) {
    name = "n" + std::to_string(id);
  }
  nets_.push_back(Net{std::move(name), std::nullopt, {}});
  return id;
}

CellId Netlist::add_cell(Cell cell) {
  const auto id = static_cast<CellId>(cells_.size());
  if (cell.inputs.size() != static_cast<std::size_t>(cell_input_count(cell.kind)) ||
      cell.outputs.size() != static_cast<std::size_t>(cell_output_count(cell.kind))) {
    throw Error(Errc::InvalidArgument, "pin count mismatch for " +
                                           std::string(cell_kind_name(cell.kind)) + " cell '" +
                                           cell.name + "'");
  }
  if (cell.name.empty()) {
    cell.name = std::string(cell_kind_name(cell.kind)) + "_" + std::to_string(id);
  }
  if (!by_name_.emplace(cell.name, id).second) {
    throw Error(Errc::InvalidArgument, "duplicate cell name '" + cell.name + "'");
  }
  for (std::uint32_t p = 0; p < cell.inputs.size(); ++p) {
    if (cell.inputs[p] != kNoNet) {
      nets_.at(cell.inputs[p]).sinks.push_back({id, p});
    }
  }
  for (std::uint32_t p = 0; p < cell.outputs.size(); ++p) {
    Net& n = nets_.at(cell.outputs[p]);
    if (n.driver) {
      throw Error(Errc::InvalidArgument, "net '" + n.name + "' has two drivers");
    }
    n.driver = PinRef{id, p};
  }
  if (cell.kind == CellKind::InPort) {
    inputs_.push_back(id);
  } else if (cell.kind == CellKind::OutPort) {
    outputs_.push_back(id);
  }
  cells_.push_back(std::move(cell));
  return id;
}

std::optional<CellId> Netlist::find_cell(std::string_view name) const {
  const auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) {
    return std::nullopt;
  }
  return it->second;
}

int Netlist::count(CellKind kind) const {
  return static_cast<int>(
      std::count_if(cells_.begin(), cells_.end(), [kind](const Cell& c) { return c.kind == kind; }));
}

void Netlist::validate() const {
  for (const Cell& c : cells_) {
    for (std::size_t p = 0; p < c.inputs.size(); ++p) {
      if (c.inputs[p] == kNoNet) {
        throw Error(Errc::UnconnectedPin,
                    "input " + std::to_string(p) + " of cell '" + c.name + "' is unconnected");
      }
    }
  }
  for (const Net& n : nets_) {
    if (!n.driver && !n.sinks.empty()) {
      throw Error(Errc::UnconnectedPin, "net '" + n.name + "' has sinks but no driver");
    }
  }
}

std::string write_netlist(const Netlist& netlist) {
  std::ostringstream out;
  out << "# efab netlist v1\n";
  for (const Net& n : netlist.nets()) {
    out << "net " << n.name << '\n';
  }
  for (const Cell& c : netlist.cells()) {
    out << "cell " << cell_kind_name(c.kind) << ' ' << c.name;
    if (c.kind == CellKind::Lut4) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "%04x", c.truth_table);
      out << " 0x" << buf;
    } else if (c.kind == CellKind::Const) {
      out << ' ' << (c.const_value ? 1 : 0);
    }
    out << " :";
    for (NetId n : c.inputs) {
      out << ' ' << netlist.net(n).name;
    }
    out << " ->";
    for (NetId n : c.outputs) {
      out << ' ' << netlist.net(n).name;
    }
    out << '\n';
  }
  return out.str();
}

Netlist read_netlist(std::string_view text) {
  Netlist nl;
  std::unordered_map<std::string, NetId> nets;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw Error(Errc::ParseError, "netlist line " + std::to_string(line_no) + ": " + why);
  };
  auto net_ref = [&](const std::string& name) -> NetId {
    const auto it = nets.find(name);
    if (it == nets.end()) {
      fail("undeclared net '" + name + "'");
    }
    return it->second;
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word) || word.front() == '#') {
      continue;
    }
    if (word == "net") {
      std::string name;
      if (!(ls >> name)) {
        fail("missing net name");
      }
      if (nets.count(name)) {
        fail("net '" + name + "' declared twice");
      }
      nets.emplace(name, nl.add_net(name));
      continue;
    }
    if (word != "cell") {
      fail("expected 'net' or 'cell'");
    }
    std::string kind_name;
    Cell cell;
    if (!(ls >> kind_name >> cell.name)) {
      fail("truncated cell line");
    }
    bool known = false;
    for (CellKind k : {CellKind::Lut4, CellKind::Dff, CellKind::DspMac, CellKind::InPort,
                       CellKind::OutPort, CellKind::Const}) {
      if (cell_kind_name(k) == kind_name) {
        cell.kind = k;
        known = true;
      }
    }
    if (!known) {
      fail("unknown cell kind '" + kind_name + "'");
    }
    std::string tok;
    if (cell.kind == CellKind::Lut4) {
      ls >> tok;
      unsigned value = 0;
      const char* first = tok.data() + (tok.rfind("0x", 0) == 0 ? 2 : 0);
      const auto res = std::from_chars(first, tok.data() + tok.size(), value, 16);
      if (res.ec != std::errc{} || value > 0xFFFF) {
        fail("bad truth table '" + tok + "'");
      }
      cell.truth_table = static_cast<std::uint16_t>(value);
    } else if (cell.kind == CellKind::Const) {
      ls >> tok;
      if (tok != "0" && tok != "1") {
        fail("const value must be 0 or 1");
      }
      cell.const_value = tok == "1";
    }
    if (!(ls >> tok) || tok != ":") {
      fail("expected ':'");
    }
    bool outputs = false;
    while (ls >> tok) {
      if (tok == "->") {
        outputs = true;
        continue;
      }
      (outputs ? cell.outputs : cell.inputs).push_back(net_ref(tok));
    }
    try {
      nl.add_cell(std::move(cell));
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  nl.validate();
  return nl;
}

std::vector<CellId> topological_luts(const Netlist& netlist) {
  const auto& cells = netlist.cells();
  std::vector<int> pending(cells.size(), 0);
  std::vector<CellId> ready;
  for (CellId id = 0; id < cells.size(); ++id) {
    if (cells[id].kind != CellKind::Lut4) {
      continue;
    }
    for (NetId n : cells[id].inputs) {
      const auto& drv = netlist.net(n).driver;
      if (drv && cells[drv->cell].kind == CellKind::Lut4) {
        ++pending[id];
      }
    }
    if (pending[id] == 0) {
      ready.push_back(id);
    }
  }
  std::vector<CellId> order;
  for (std::size_t i = 0; i < ready.size(); ++i) {
    const CellId id = ready[i];
    order.push_back(id);
    for (const PinRef& s : netlist.net(cells[id].outputs[0]).sinks) {
      if (cells[s.cell].kind == CellKind::Lut4 && --pending[s.cell] == 0) {
        ready.push_back(s.cell);
      }
    }
  }
  const auto total = static_cast<std::size_t>(netlist.count(CellKind::Lut4));
  if (order.size() != total) {
    for (CellId id = 0; id < cells.size(); ++id) {
      if (cells[id].kind == CellKind::Lut4 && pending[id] > 0) {
        throw Error(Errc::CombinationalLoop, "LUT '" + cells[id].name + "' is on a combinational cycle");
      }
    }
  }
  return order;
}

NetlistSimulator::NetlistSimulator(const Netlist& netlist) {
  netlist.validate();
  values_.assign(netlist.nets().size(), 0);
  for (CellId id : topological_luts(netlist)) {
    const Cell& c = netlist.cell(id);
    Lut l{c.truth_table, {c.inputs[0], c.inputs[1], c.inputs[2], c.inputs[3]}, c.outputs[0]};
    luts_.push_back(l);
  }
  for (const Cell& c : netlist.cells()) {
    switch (c.kind) {
      case CellKind::Dff:
        dffs_.push_back({c.inputs[0], c.outputs[0]});
        break;
      case CellKind::DspMac: {
        Dsp d{};
        std::copy_n(c.inputs.begin(), 8, d.a);
        std::copy_n(c.inputs.begin() + 8, 8, d.b);
        std::copy_n(c.outputs.begin(), 20, d.acc);
        dsps_.push_back(d);
        break;
      }
      case CellKind::Const:
        consts_.emplace_back(c.outputs[0], c.const_value ? 1 : 0);
        break;
      default:
        break;
    }
  }
  for (CellId id : netlist.inputs()) {
    in_nets_.push_back(netlist.cell(id).outputs[0]);
  }
  for (CellId id : netlist.outputs()) {
    out_nets_.push_back(netlist.cell(id).inputs[0]);
  }
  reset();
}

void NetlistSimulator::reset() {
  dff_state_.assign(dffs_.size(), 0);
  dsp_state_.assign(dsps_.size(), 0);
  cycle_ = 0;
}

void NetlistSimulator::settle(std::span<const std::uint8_t> inputs) {
  if (inputs.size() != in_nets_.size()) {
    throw Error(Errc::InvalidArgument, "expected " + std::to_string(in_nets_.size()) +
                                           " input bits, got " + std::to_string(inputs.size()));
  }
  for (const auto& [net, v] : consts_) {
    values_[net] = v;
  }
  for (std::size_t i = 0; i < in_nets_.size(); ++i) {
    values_[in_nets_[i]] = inputs[i] & 1U;
  }
  for (std::size_t i = 0; i < dffs_.size(); ++i) {
    values_[dffs_[i].q] = dff_state_[i];
  }
  for (std::size_t i = 0; i < dsps_.size(); ++i) {
    for (int b = 0; b < 20; ++b) {
      values_[dsps_[i].acc[b]] = (dsp_state_[i] >> b) & 1U;
    }
  }
  for (const Lut& l : luts_) {
    const unsigned idx = values_[l.in[0]] | (values_[l.in[1]] << 1) | (values_[l.in[2]] << 2) |
                         (values_[l.in[3]] << 3);
    values_[l.out] = eval_lut4(l.truth, idx);
  }
}

std::vector<std::uint8_t> NetlistSimulator::sample() const {
  std::vector<std::uint8_t> out(out_nets_.size());
  for (std::size_t i = 0; i < out_nets_.size(); ++i) {
    out[i] = values_[out_nets_[i]];
  }
  return out;
}

std::vector<std::uint8_t> NetlistSimulator::peek(std::span<const std::uint8_t> inputs) {
  settle(inputs);
  return sample();
}

std::vector<std::uint8_t> NetlistSimulator::step(std::span<const std::uint8_t> inputs) {
  settle(inputs);
  auto out = sample();
  for (std::size_t i = 0; i < dffs_.size(); ++i) {
    dff_state_[i] = values_[dffs_[i].d];
  }
  for (std::size_t i = 0; i < dsps_.size(); ++i) {
    unsigned a = 0;
    unsigned b = 0;
    for (int k = 0; k < 8; ++k) {
      a |= unsigned{values_[dsps_[i].a[k]]} << k;
      b |= unsigned{values_[dsps_[i].b[k]]} << k;
    }
    dsp_state_[i] = dsp_mac(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b), dsp_state_[i]);
  }
  ++cycle_;
  return out;
}

std::vector<std::vector<std::uint8_t>> netlist_sim(const Netlist& netlist,
                                                   const std::vector<std::vector<std::uint8_t>>& trace) {
  NetlistSimulator sim(netlist);
  std::vector<std::vector<std::uint8_t>> out;
  out.reserve(trace.size());
  for (const auto& frame : trace) {
    out.push_back(sim.step(frame));
  }
  return out;
}

}  // namespace efab
