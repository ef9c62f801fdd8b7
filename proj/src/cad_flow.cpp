// SPDX-License-Identifier: Apache-2.0
#include "efab/cad_flow.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "cad_internal.hpp"
#include "efab/error.hpp"

namespace efab {
namespace detail {

SiteClass site_class_for(CellKind kind) {
  switch (kind) {
    case CellKind::DspMac:
      return SiteClass::Dsp;
    case CellKind::InPort:
      return SiteClass::IoIn;
    case CellKind::OutPort:
      return SiteClass::IoOut;
    default:
      return SiteClass::Logic;
  }
}

NetClass classify_net(const Netlist& netlist, const Placement& placement, NetId net) {
  const auto& drv = netlist.net(net).driver;
  const Cell& c = netlist.cell(drv->cell);
  if (c.kind == CellKind::Const) {
    return NetClass::Constant;
  }
  if (c.kind == CellKind::Lut4 && placement.packed[drv->cell]) {
    return NetClass::Internal;
  }
  return NetClass::Routed;
}

Terminal driver_terminal(const Netlist& netlist, const Placement& placement, NetId net) {
  const PinRef drv = *netlist.net(net).driver;
  const Site& s = *placement.sites[drv.cell];
  if (netlist.cell(drv.cell).kind == CellKind::DspMac) {
    const int pin = static_cast<int>(drv.pin);
    if (pin < kDspHalfAccBits) {
      return {s.tile, pin};
    }
    return {{s.tile.row + 1, s.tile.col}, pin - kDspHalfAccBits};
  }
  return {s.tile, s.index};
}

std::vector<Terminal> sink_terminals(const Netlist& netlist, const Placement& placement, NetId net) {
  std::vector<Terminal> out;
  for (const PinRef& p : netlist.net(net).sinks) {
    const Cell& c = netlist.cell(p.cell);
    const Site& s = *placement.sites[p.cell];
    const int pin = static_cast<int>(p.pin);
    switch (c.kind) {
      case CellKind::Lut4:
        out.push_back({s.tile, 4 * s.index + pin});
        break;
      case CellKind::Dff: {
        const auto& d = netlist.net(c.inputs[0]).driver;
        if (!(d && placement.packed[d->cell])) {
          out.push_back({s.tile, 4 * s.index});
        }
        break;
      }
      case CellKind::OutPort:
        out.push_back({s.tile, s.index});
        break;
      case CellKind::DspMac:
        if (pin < kDspOperandBits) {
          out.push_back({s.tile, pin});
        } else {
          out.push_back({{s.tile.row + 1, s.tile.col}, pin - kDspOperandBits});
        }
        break;
      default:
        break;
    }
  }
  return out;
}

}  // namespace detail

std::string_view site_class_name(SiteClass cls) {
  switch (cls) {
    case SiteClass::Logic:
      return "logic";
    case SiteClass::Dsp:
      return "dsp";
    case SiteClass::IoIn:
      return "io-input";
    case SiteClass::IoOut:
      return "io-output";
  }
  return "?";
}

Site io_pin_site(const FabricLayout& layout, IoPin pin, bool output) {
  const auto tiles = layout.io_tiles(pin.side == IoSide::West ? TileKind::WestIo : TileKind::EastIo);
  if (pin.index < 0 || static_cast<std::size_t>(pin.index) >= tiles.size() * kIoBitsPerTile) {
    throw Error(Errc::InvalidArgument, "IO pin index " + std::to_string(pin.index) + " out of range");
  }
  return Site{output ? SiteClass::IoOut : SiteClass::IoIn,
              tiles[static_cast<std::size_t>(pin.index / kIoBitsPerTile)], pin.index % kIoBitsPerTile};
}

IoPin site_io_pin(const FabricLayout& layout, const Site& site) {
  const TileKind k = layout.at(site.tile);
  const auto tiles = layout.io_tiles(k);
  const auto it = std::find(tiles.begin(), tiles.end(), site.tile);
  if (it == tiles.end() || (k != TileKind::WestIo && k != TileKind::EastIo)) {
    throw Error(Errc::InvalidArgument, "site is not on an IO tile");
  }
  return IoPin{k == TileKind::WestIo ? IoSide::West : IoSide::East,
               static_cast<int>(it - tiles.begin()) * kIoBitsPerTile + site.index};
}

TileConfigs build_configs(const Netlist& netlist, const Placement& placement, const RoutingResult& routing,
                          const FabricLayout& layout) {
  TileConfigs cfg = blank_configs(layout);
  for (CellId id = 0; id < netlist.cells().size(); ++id) {
    const Cell& c = netlist.cell(id);
    if (c.kind == CellKind::Dff) {
      const Site& s = *placement.sites[id];
      const auto& d = netlist.net(c.inputs[0]).driver;
      const bool packed = d && placement.packed[d->cell];
      set_lut_slot(cfg.at(s.tile), s.index,
                   {packed ? netlist.cell(d->cell).truth_table : std::uint16_t{0xAAAA}, true});
    } else if (c.kind == CellKind::Lut4 && !placement.packed[id]) {
      const Site& s = *placement.sites[id];
      set_lut_slot(cfg.at(s.tile), s.index, {c.truth_table, false});
    } else if (c.kind == CellKind::DspMac) {
      cfg.at(placement.sites[id]->tile).set(0, true);
    }
  }

  std::map<NetId, const NetRoute*> routes;
  for (const NetRoute& r : routing.nets) {
    routes[r.net] = &r;
  }
  for (NetId n = 0; n < netlist.nets().size(); ++n) {
    if (!netlist.net(n).driver) {
      continue;
    }
    const auto cls = detail::classify_net(netlist, placement, n);
    if (cls == detail::NetClass::Internal) {
      continue;
    }
    if (cls == detail::NetClass::Constant) {
      const int v = netlist.cell(netlist.net(n).driver->cell).const_value ? 1 : 0;
      for (const detail::Terminal& t : detail::sink_terminals(netlist, placement, n)) {
        set_mux_select(cfg.at(t.tile), layout.at(t.tile), t.local, v);
      }
      continue;
    }
    const detail::Terminal drv = detail::driver_terminal(netlist, placement, n);
    std::map<TileCoord, int> source{{drv.tile, SwitchGeometry::local_source_base() + drv.local}};
    if (const auto it = routes.find(n); it != routes.end()) {
      for (const RouteHop& h : it->second->hops) {
        const TileKind k = layout.at(h.tile);
        set_mux_select(cfg.at(h.tile), k, switch_geometry(k).track_sink(h.side, h.track), source.at(h.tile));
        source[*layout.routable_neighbor(h.tile, h.side)] = SwitchGeometry::track_source(opposite(h.side), h.track);
      }
    }
    for (const detail::Terminal& t : detail::sink_terminals(netlist, placement, n)) {
      const auto it = source.find(t.tile);
      if (it == source.end()) {
        throw Error(Errc::InvalidConfig, "net '" + netlist.net(n).name + "' does not reach a sink tile");
      }
      set_mux_select(cfg.at(t.tile), layout.at(t.tile), t.local, it->second);
    }
  }
  return cfg;
}

std::vector<std::uint8_t> generate_config(const Netlist& netlist, const Placement& placement,
                                          const RoutingResult& routing, const FabricLayout& layout) {
  return encode_bitstream(layout, build_configs(netlist, placement, routing, layout));
}

PortBinding::PortBinding(const Netlist& netlist, const Placement& placement, const FabricLayout& layout)
    : blank_(make_io_frame(layout)) {
  for (CellId c : netlist.inputs()) {
    in_.push_back(site_io_pin(layout, *placement.sites[c]));
  }
  for (CellId c : netlist.outputs()) {
    out_.push_back(site_io_pin(layout, *placement.sites[c]));
  }
}

IoFrame PortBinding::to_frame(std::span<const std::uint8_t> inputs) const {
  if (inputs.size() != in_.size()) {
    throw Error(Errc::InvalidArgument, "expected " + std::to_string(in_.size()) + " input bits");
  }
  IoFrame f = blank_;
  for (std::size_t i = 0; i < in_.size(); ++i) {
    auto& v = in_[i].side == IoSide::West ? f.west_in : f.east_in;
    v[static_cast<std::size_t>(in_[i].index)] = inputs[i] & 1U;
  }
  return f;
}

std::vector<std::uint8_t> PortBinding::from_frame(const IoFrame& frame) const {
  std::vector<std::uint8_t> out(out_.size());
  for (std::size_t i = 0; i < out_.size(); ++i) {
    const auto& v = out_[i].side == IoSide::West ? frame.west_out : frame.east_out;
    out[i] = v[static_cast<std::size_t>(out_[i].index)];
  }
  return out;
}

FlowResult run_flow(const Netlist& netlist, const FabricLayout& layout, const FlowOptions& options) {
  FlowResult r;
  r.placement = place(netlist, layout, options.place);
  check_placement(netlist, layout, r.placement);
  r.routing = route(netlist, r.placement, layout, options.route);
  check_routing(netlist, r.placement, layout, r.routing);
  r.image = generate_config(netlist, r.placement, r.routing, layout);
  r.luts_used = netlist.count(CellKind::Lut4);
  r.dsps_used = netlist.count(CellKind::DspMac);
  std::set<Site> slots;
  for (CellId id = 0; id < netlist.cells().size(); ++id) {
    if (r.placement.sites[id] && r.placement.sites[id]->cls == SiteClass::Logic) {
      slots.insert(*r.placement.sites[id]);
    }
  }
  r.slots_used = static_cast<int>(slots.size());
  return r;
}

EquivalenceResult check_fabric_equivalence(const Netlist& netlist, const FabricLayout& layout,
                                           const FlowResult& flow, std::uint64_t cycles, std::uint64_t seed) {
  NetlistSimulator golden(netlist);
  FabricState fabric = FabricState::load(layout, flow.image);
  const PortBinding ports(netlist, flow.placement, layout);
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> in(netlist.inputs().size());
  EquivalenceResult r;
  for (std::uint64_t cyc = 0; cyc < cycles; ++cyc) {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (i % 64 == 0) {
        bits = rng();
      }
      in[i] = static_cast<std::uint8_t>((bits >> (i % 64)) & 1U);
    }
    const auto want = golden.step(in);
    const auto got = ports.from_frame(fabric.step(ports.to_frame(in)));
    ++r.vectors;
    if (want != got) {
      if (r.mismatches == 0) {
        r.first_mismatch = cyc;
      }
      ++r.mismatches;
    }
  }
  return r;
}

}  // namespace efab
