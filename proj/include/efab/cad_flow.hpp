// SPDX-License-Identifier: Apache-2.0
//
// Packing, placement, routing and configuration generation.
#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "efab/bitstream.hpp"
#include "efab/fabric_model.hpp"
#include "efab/fabric_sim.hpp"
#include "efab/netlist.hpp"

namespace efab {

enum class SiteClass : std::uint8_t { Logic, Dsp, IoIn, IoOut };

std::string_view site_class_name(SiteClass cls);

/// A physical location. `index` is the LUT/FF slot for Logic, the IO bit for IoIn/IoOut,
/// and 0 for Dsp (whose tile is the DSP_top half).
struct Site {
  SiteClass cls = SiteClass::Logic;
  TileCoord tile;
  int index = 0;
  friend bool operator==(const Site&, const Site&) = default;
  friend auto operator<=>(const Site&, const Site&) = default;
};

enum class IoSide : std::uint8_t { West, East };

/// Position of a port bit in the fabric's IoFrame vectors.
struct IoPin {
  IoSide side = IoSide::West;
  int index = 0;
  friend bool operator==(const IoPin&, const IoPin&) = default;
};

/// Port-name constraints for InPort / OutPort cells.
using PinMap = std::map<std::string, IoPin, std::less<>>;

Site io_pin_site(const FabricLayout& layout, IoPin pin, bool output);
IoPin site_io_pin(const FabricLayout& layout, const Site& site);

struct Placement {
  /// Per cell; empty for Const cells.
  std::vector<std::optional<Site>> sites;
  /// True for a Lut4 sharing its slot with the Dff it feeds.
  std::vector<bool> packed;
  double wirelength = 0.0;
  int temperatures = 0;
};

struct PlaceOptions {
  std::uint64_t seed = 1;
  PinMap pins;
  /// Moves per temperature = moves_per_block * movable blocks.
  int moves_per_block = 100;
  double cooling = 0.95;
  int max_temperatures = 300;
};

/// Simulated annealing over half-perimeter wirelength. Throws CapacityExceeded.
Placement place(const Netlist& netlist, const FabricLayout& layout, const PlaceOptions& options = {});

/// Throws InvalidConfig describing the first illegality.
void check_placement(const Netlist& netlist, const FabricLayout& layout, const Placement& placement);

/// One track segment: leaves `tile` through `side` on `track`.
struct RouteHop {
  TileCoord tile;
  Side side = Side::North;
  int track = 0;
  friend bool operator==(const RouteHop&, const RouteHop&) = default;
};

struct NetRoute {
  NetId net = kNoNet;
  /// Parent-before-child order starting at the driver tile.
  std::vector<RouteHop> hops;
};

struct RoutingResult {
  std::vector<NetRoute> nets;
  int congestion = 0;  // max nets sharing one track
  int iterations = 0;
  std::size_t wire_segments() const;
};

struct RouteOptions {
  int max_iterations = 50;
  double initial_present_factor = 0.5;
  double present_factor_growth = 1.5;
  double history_factor = 1.0;
};

/// Negotiated-congestion maze routing. Throws Unroutable naming the overused nets.
RoutingResult route(const Netlist& netlist, const Placement& placement, const FabricLayout& layout,
                    const RouteOptions& options = {});

/// Throws InvalidConfig unless every hop chain is connected and no track is shared.
void check_routing(const Netlist& netlist, const Placement& placement, const FabricLayout& layout,
                   const RoutingResult& routing);

TileConfigs build_configs(const Netlist& netlist, const Placement& placement,
                          const RoutingResult& routing, const FabricLayout& layout);
std::vector<std::uint8_t> generate_config(const Netlist& netlist, const Placement& placement,
                                          const RoutingResult& routing, const FabricLayout& layout);

/// Translates between netlist port valuations (Netlist::inputs()/outputs() order) and
/// fabric IoFrames for a placed design.
class PortBinding {
 public:
  PortBinding(const Netlist& netlist, const Placement& placement, const FabricLayout& layout);
  IoFrame to_frame(std::span<const std::uint8_t> inputs) const;
  std::vector<std::uint8_t> from_frame(const IoFrame& frame) const;
  IoPin input_pin(std::size_t i) const { return in_[i]; }
  IoPin output_pin(std::size_t i) const { return out_[i]; }

 private:
  IoFrame blank_;
  std::vector<IoPin> in_;
  std::vector<IoPin> out_;
};

struct FlowOptions {
  PlaceOptions place;
  RouteOptions route;
};

struct FlowResult {
  Placement placement;
  RoutingResult routing;
  std::vector<std::uint8_t> image;
  int luts_used = 0;
  int slots_used = 0;
  int dsps_used = 0;
};

/// place -> check -> route -> check -> generate_config.
FlowResult run_flow(const Netlist& netlist, const FabricLayout& layout, const FlowOptions& options = {});

struct EquivalenceResult {
  std::uint64_t vectors = 0;
  std::uint64_t mismatches = 0;
  std::uint64_t first_mismatch = std::numeric_limits<std::uint64_t>::max();
  bool passed() const { return vectors > 0 && mismatches == 0; }
};

/// Drives identical random input traces (from reset) into netlist_sim and fabric-sim.
EquivalenceResult check_fabric_equivalence(const Netlist& netlist, const FabricLayout& layout,
                                           const FlowResult& flow, std::uint64_t cycles,
                                           std::uint64_t seed);

}  // namespace efab
