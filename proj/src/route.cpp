// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <queue>
#include <array>
#include <limits>
#include <set>
#include <tuple>

#include "cad_internal.hpp"
#include "efab/error.hpp"

namespace efab {
namespace {

constexpr std::array kSides = {Side::North, Side::East, Side::South, Side::West};

struct RouteNet {
  NetId net = kNoNet;
  int driver = 0;           // tile index
  std::vector<int> sinks;   // distinct tile indices, excluding the driver tile
  std::vector<int> edges;   // edge = tile * 4 + side
};

class Router {
 public:
  Router(const Netlist& nl, const Placement& pl, const FabricLayout& layout, const RouteOptions& opt)
      : nl_(nl), pl_(pl), layout_(layout), opt_(opt) {
    const int n_tiles = layout.rows() * layout.cols();
    edge_to_.assign(static_cast<std::size_t>(n_tiles) * 4, -1);
    for (int r = 0; r < layout.rows(); ++r) {
      for (int c = 0; c < layout.cols(); ++c) {
        if (!is_routable(layout.at(r, c))) {
          continue;
        }
        for (Side s : kSides) {
          if (const auto nb = layout.routable_neighbor({r, c}, s)) {
            edge_to_[static_cast<std::size_t>(index({r, c}) * 4 + static_cast<int>(s))] = index(*nb);
          }
        }
      }
    }
    occ_.assign(edge_to_.size(), 0);
    hist_.assign(edge_to_.size(), 0.0);
  }

  RoutingResult run() {
    collect_nets();
    double pres = opt_.initial_present_factor;
    RoutingResult result;
    for (int it = 1; it <= opt_.max_iterations; ++it) {
      for (RouteNet& n : nets_) {
        for (int e : n.edges) {
          --occ_[static_cast<std::size_t>(e)];
        }
        route_net(n, pres);
        for (int e : n.edges) {
          ++occ_[static_cast<std::size_t>(e)];
        }
      }
      result.iterations = it;
      bool overused = false;
      for (std::size_t e = 0; e < occ_.size(); ++e) {
        if (occ_[e] > kChannelWidth) {
          overused = true;
          hist_[e] += opt_.history_factor * (occ_[e] - kChannelWidth);
        }
      }
      if (!overused) {
        return finish(result);
      }
      pres *= opt_.present_factor_growth;
    }
    std::string names;
    int listed = 0;
    int failing = 0;
    for (const RouteNet& n : nets_) {
      if (std::any_of(n.edges.begin(), n.edges.end(),
                      [&](int e) { return occ_[static_cast<std::size_t>(e)] > kChannelWidth; })) {
        ++failing;
        if (listed++ < 8) {
          names += (names.empty() ? "" : ", ") + display_name(n.net);
        }
      }
    }
    throw Error(Errc::Unroutable, std::to_string(failing) + " nets still overuse tracks after " +
                                      std::to_string(opt_.max_iterations) + " iterations: " + names);
  }

 private:
  int index(TileCoord t) const { return t.row * layout_.cols() + t.col; }
  TileCoord coord(int i) const { return {i / layout_.cols(), i % layout_.cols()}; }

  std::string display_name(NetId n) const {
    const std::string& s = nl_.net(n).name;
    return s.empty() ? "net#" + std::to_string(n) : s;
  }

  void collect_nets() {
    for (NetId n = 0; n < nl_.nets().size(); ++n) {
      if (!nl_.net(n).driver || detail::classify_net(nl_, pl_, n) != detail::NetClass::Routed) {
        continue;
      }
      RouteNet rn;
      rn.net = n;
      rn.driver = index(detail::driver_terminal(nl_, pl_, n).tile);
      for (const detail::Terminal& t : detail::sink_terminals(nl_, pl_, n)) {
        const int ti = index(t.tile);
        if (ti != rn.driver && std::find(rn.sinks.begin(), rn.sinks.end(), ti) == rn.sinks.end()) {
          rn.sinks.push_back(ti);
        }
      }
      if (rn.sinks.empty()) {
        continue;
      }
      const TileCoord d = coord(rn.driver);
      std::stable_sort(rn.sinks.begin(), rn.sinks.end(), [&](int a, int b) {
        const TileCoord ta = coord(a);
        const TileCoord tb = coord(b);
        return std::abs(ta.row - d.row) + std::abs(ta.col - d.col) <
               std::abs(tb.row - d.row) + std::abs(tb.col - d.col);
      });
      nets_.push_back(std::move(rn));
    }
  }

  double edge_cost(int e, double pres) const {
    const int over = std::max(0, occ_[static_cast<std::size_t>(e)] + 1 - kChannelWidth);
    return (1.0 + hist_[static_cast<std::size_t>(e)]) * (1.0 + pres * over);
  }

  void route_net(RouteNet& n, double pres) {
    n.edges.clear();
    const std::size_t n_tiles = edge_to_.size() / 4;
    std::vector<char> in_tree(n_tiles, 0);
    in_tree[static_cast<std::size_t>(n.driver)] = 1;
    std::vector<double> dist(n_tiles);
    std::vector<int> via(n_tiles);
    using Item = std::pair<double, int>;
    for (int target : n.sinks) {
      if (in_tree[static_cast<std::size_t>(target)]) {
        continue;
      }
      std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
      std::fill(via.begin(), via.end(), -1);
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      for (std::size_t t = 0; t < n_tiles; ++t) {
        if (in_tree[t]) {
          dist[t] = 0.0;
          pq.emplace(0.0, static_cast<int>(t));
        }
      }
      while (!pq.empty()) {
        const auto [d, t] = pq.top();
        pq.pop();
        if (d > dist[static_cast<std::size_t>(t)]) {
          continue;
        }
        if (t == target) {
          break;
        }
        for (int s = 0; s < 4; ++s) {
          const int e = t * 4 + s;
          const int to = edge_to_[static_cast<std::size_t>(e)];
          if (to < 0 || in_tree[static_cast<std::size_t>(to)]) {
            continue;
          }
          const double nd = d + edge_cost(e, pres);
          if (nd < dist[static_cast<std::size_t>(to)]) {
            dist[static_cast<std::size_t>(to)] = nd;
            via[static_cast<std::size_t>(to)] = e;
            pq.emplace(nd, to);
          }
        }
      }
      if (via[static_cast<std::size_t>(target)] < 0) {
        throw Error(Errc::Unroutable, "no path exists for net '" + display_name(n.net) + "'");
      }
      for (int t = target; !in_tree[static_cast<std::size_t>(t)];) {
        const int e = via[static_cast<std::size_t>(t)];
        n.edges.push_back(e);
        in_tree[static_cast<std::size_t>(t)] = 1;
        t = e / 4;
      }
    }
  }

  RoutingResult finish(RoutingResult result) const {
    std::vector<int> next_track(edge_to_.size(), 0);
    for (const RouteNet& n : nets_) {
      NetRoute nr;
      nr.net = n.net;
      // Emit hops parent-before-child by walking outward from the driver tile.
      std::vector<int> frontier{n.driver};
      std::vector<char> done(n.edges.size(), 0);
      while (!frontier.empty()) {
        const int t = frontier.back();
        frontier.pop_back();
        for (std::size_t i = 0; i < n.edges.size(); ++i) {
          const int e = n.edges[i];
          if (done[i] || e / 4 != t) {
            continue;
          }
          done[i] = 1;
          nr.hops.push_back(RouteHop{coord(t), static_cast<Side>(e % 4), next_track[static_cast<std::size_t>(e)]++});
          frontier.push_back(edge_to_[static_cast<std::size_t>(e)]);
        }
      }
      result.nets.push_back(std::move(nr));
    }
    result.congestion = 0;
    for (int used : next_track) {
      if (used > 0) {
        result.congestion = 1;
      }
    }
    return result;
  }

  const Netlist& nl_;
  const Placement& pl_;
  const FabricLayout& layout_;
  const RouteOptions& opt_;
  std::vector<int> edge_to_;
  std::vector<int> occ_;
  std::vector<double> hist_;
  std::vector<RouteNet> nets_;
};

}  // namespace

std::size_t RoutingResult::wire_segments() const {
  std::size_t n = 0;
  for (const NetRoute& r : nets) {
    n += r.hops.size();
  }
  return n;
}

RoutingResult route(const Netlist& netlist, const Placement& placement, const FabricLayout& layout,
                    const RouteOptions& options) {
  return Router(netlist, placement, layout, options).run();
}

void check_routing(const Netlist& netlist, const Placement& placement, const FabricLayout& layout,
                   const RoutingResult& routing) {
  auto fail = [](const std::string& msg) { throw Error(Errc::InvalidConfig, "illegal routing: " + msg); };
  std::set<std::tuple<TileCoord, Side, int>> used;
  std::set<NetId> seen;
  for (const NetRoute& nr : routing.nets) {
    if (nr.net >= netlist.nets().size() || !seen.insert(nr.net).second) {
      fail("bad or duplicate net id");
    }
    std::set<TileCoord> reached{detail::driver_terminal(netlist, placement, nr.net).tile};
    for (const RouteHop& h : nr.hops) {
      if (!reached.count(h.tile)) {
        fail("hop from a tile the net has not reached");
      }
      if (h.track < 0 || h.track >= kChannelWidth) {
        fail("track index out of range");
      }
      const auto nb = layout.routable_neighbor(h.tile, h.side);
      if (!nb) {
        fail("hop leaves the routable fabric");
      }
      if (!reached.insert(*nb).second) {
        fail("net enters a tile twice");
      }
      if (!used.emplace(h.tile, h.side, h.track).second) {
        fail("track shared by two nets");
      }
    }
    for (const detail::Terminal& t : detail::sink_terminals(netlist, placement, nr.net)) {
      if (!reached.count(t.tile)) {
        fail("sink tile not reached");
      }
    }
  }
  for (NetId n = 0; n < netlist.nets().size(); ++n) {
    if (!netlist.net(n).driver || seen.count(n) ||
        detail::classify_net(netlist, placement, n) != detail::NetClass::Routed) {
      continue;
    }
    const TileCoord d = detail::driver_terminal(netlist, placement, n).tile;
    for (const detail::Terminal& t : detail::sink_terminals(netlist, placement, n)) {
      if (t.tile != d) {
        fail("net has remote sinks but no route");
      }
    }
  }
}

}  // namespace efab
