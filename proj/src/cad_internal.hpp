// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the placer, router and configuration generator.
#pragma once

#include <cstdint>
#include <vector>

#include "efab/cad_flow.hpp"

namespace efab::detail {

SiteClass site_class_for(CellKind kind);

/// A switch-matrix endpoint: local source (for drivers) or local sink index at `tile`.
struct Terminal {
  TileCoord tile;
  int local = 0;
};

enum class NetClass { Routed, Constant, Internal };

NetClass classify_net(const Netlist& netlist, const Placement& placement, NetId net);
Terminal driver_terminal(const Netlist& netlist, const Placement& placement, NetId net);
/// Sink terminals; pins absorbed by packing are skipped.
std::vector<Terminal> sink_terminals(const Netlist& netlist, const Placement& placement, NetId net);

/// Portable uniform helpers over a 64-bit engine.
template <class Rng>
std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return rng() % n;
}
template <class Rng>
double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace efab::detail
