// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <array>
#include <map>
#include <set>

#include "cad_internal.hpp"
#include "efab/error.hpp"

namespace efab {
namespace {

using detail::uniform_index;
using detail::uniform_unit;

constexpr int kNone = -1;
constexpr std::size_t kClassCount = 4;

struct Block {
  SiteClass cls = SiteClass::Logic;
  std::vector<CellId> cells;  // Dff first when a Lut is packed with it
  int site = kNone;
  bool fixed = false;
  std::vector<int> nets;
};

struct PlaceNet {
  std::vector<int> blocks;
  int cost = 0;
};

class Annealer {
 public:
  Annealer(const Netlist& netlist, const FabricLayout& layout, const PlaceOptions& options)
      : nl_(netlist), layout_(layout), opt_(options), rng_(options.seed) {}

  Placement run() {
    pack();
    build_sites();
    check_capacity();
    initial_placement();
    build_nets();
    anneal();
    return result();
  }

 private:
  void pack() {
    const auto& cells = nl_.cells();
    packed_.assign(cells.size(), false);
    block_of_.assign(cells.size(), kNone);
    for (CellId id = 0; id < cells.size(); ++id) {
      const Cell& c = cells[id];
      if (c.kind != CellKind::Dff) {
        continue;
      }
      Block b{SiteClass::Logic, {id}, kNone, false, {}};
      const Net& d = nl_.net(c.inputs[0]);
      if (d.driver && d.sinks.size() == 1) {
        const CellId drv = d.driver->cell;
        if (nl_.cell(drv).kind == CellKind::Lut4 && !packed_[drv]) {
          packed_[drv] = true;
          b.cells.push_back(drv);
        }
      }
      add_block(std::move(b));
    }
    for (CellId id = 0; id < cells.size(); ++id) {
      const CellKind k = cells[id].kind;
      if (k == CellKind::Const || k == CellKind::Dff || (k == CellKind::Lut4 && packed_[id])) {
        continue;
      }
      add_block(Block{detail::site_class_for(k), {id}, kNone, false, {}});
    }
  }

  void add_block(Block b) {
    const int idx = static_cast<int>(blocks_.size());
    for (CellId c : b.cells) {
      block_of_[c] = idx;
    }
    blocks_.push_back(std::move(b));
  }

  void build_sites() {
    tile_sites_.assign(kClassCount, std::vector<std::vector<int>>(
                                        static_cast<std::size_t>(layout_.rows() * layout_.cols())));
    auto add = [&](SiteClass cls, TileCoord t, int index) {
      const int id = static_cast<int>(sites_.size());
      sites_.push_back(Site{cls, t, index});
      tile_sites_[static_cast<std::size_t>(cls)][tile_index(t)].push_back(id);
      class_sites_[static_cast<std::size_t>(cls)].push_back(id);
    };
    for (int r = 0; r < layout_.rows(); ++r) {
      for (int c = 0; c < layout_.cols(); ++c) {
        const TileKind k = layout_.at(r, c);
        if (k == TileKind::Lut4AB) {
          for (int s = 0; s < kSlotsPerLogicTile; ++s) {
            add(SiteClass::Logic, {r, c}, s);
          }
        } else if (k == TileKind::DspTop && r + 1 < layout_.rows() && layout_.at(r + 1, c) == TileKind::DspBot) {
          add(SiteClass::Dsp, {r, c}, 0);
        } else if (k == TileKind::WestIo || k == TileKind::EastIo) {
          for (int b = 0; b < kIoBitsPerTile; ++b) {
            add(SiteClass::IoIn, {r, c}, b);
            add(SiteClass::IoOut, {r, c}, b);
          }
        }
      }
    }
    occupant_.assign(sites_.size(), kNone);
    io_cols_.assign(static_cast<std::size_t>(layout_.rows()), {});
    for (int r = 0; r < layout_.rows(); ++r) {
      for (int c = 0; c < layout_.cols(); ++c) {
        if (layout_.at(r, c) == TileKind::WestIo || layout_.at(r, c) == TileKind::EastIo) {
          io_cols_[static_cast<std::size_t>(r)].push_back(c);
        }
      }
    }
  }

  std::size_t tile_index(TileCoord t) const { return static_cast<std::size_t>(t.row * layout_.cols() + t.col); }

  void check_capacity() {
    std::array<std::size_t, kClassCount> need{};
    for (const Block& b : blocks_) {
      ++need[static_cast<std::size_t>(b.cls)];
    }
    for (std::size_t k = 0; k < kClassCount; ++k) {
      if (need[k] > class_sites_[k].size()) {
        throw Error(Errc::CapacityExceeded,
                    std::string(site_class_name(static_cast<SiteClass>(k))) + ": design needs " +
                        std::to_string(need[k]) + " sites, layout '" + layout_.name() + "' has " +
                        std::to_string(class_sites_[k].size()));
      }
    }
  }

  void initial_placement() {
    std::map<Site, int> site_id;
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      site_id.emplace(sites_[i], static_cast<int>(i));
    }
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      Block& b = blocks_[bi];
      const Cell& c = nl_.cell(b.cells[0]);
      if (c.kind != CellKind::InPort && c.kind != CellKind::OutPort) {
        continue;
      }
      const auto it = opt_.pins.find(c.name);
      if (it == opt_.pins.end()) {
        continue;
      }
      const Site s = io_pin_site(layout_, it->second, c.kind == CellKind::OutPort);
      const int id = site_id.at(s);
      if (occupant_[static_cast<std::size_t>(id)] != kNone) {
        throw Error(Errc::InvalidArgument, "pin constraint for '" + c.name + "' collides with another port");
      }
      occupy(static_cast<int>(bi), id);
      b.fixed = true;
    }
    for (std::size_t k = 0; k < kClassCount; ++k) {
      std::vector<int> free;
      for (int id : class_sites_[k]) {
        if (occupant_[static_cast<std::size_t>(id)] == kNone) {
          free.push_back(id);
        }
      }
      for (std::size_t i = free.size(); i > 1; --i) {
        std::swap(free[i - 1], free[uniform_index(rng_, i)]);
      }
      std::size_t next = 0;
      for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        if (static_cast<std::size_t>(blocks_[bi].cls) == k && blocks_[bi].site == kNone) {
          occupy(static_cast<int>(bi), free[next++]);
        }
      }
    }
  }

  void occupy(int block, int site) {
    blocks_[static_cast<std::size_t>(block)].site = site;
    occupant_[static_cast<std::size_t>(site)] = block;
  }

  void build_nets() {
    Placement probe;
    probe.packed = packed_;
    for (NetId n = 0; n < nl_.nets().size(); ++n) {
      const Net& net = nl_.net(n);
      if (!net.driver) {
        continue;
      }
      if (detail::classify_net(nl_, probe, n) != detail::NetClass::Routed) {
        continue;
      }
      std::vector<int> blocks{block_of_[net.driver->cell]};
      for (const PinRef& p : net.sinks) {
        const int b = block_of_[p.cell];
        if (std::find(blocks.begin(), blocks.end(), b) == blocks.end()) {
          blocks.push_back(b);
        }
      }
      if (blocks.size() < 2) {
        continue;
      }
      const int id = static_cast<int>(nets_.size());
      for (int b : blocks) {
        blocks_[static_cast<std::size_t>(b)].nets.push_back(id);
      }
      nets_.push_back(PlaceNet{std::move(blocks), 0});
    }
    total_ = 0;
    for (PlaceNet& n : nets_) {
      n.cost = net_cost(n);
      total_ += n.cost;
    }
  }

  int net_cost(const PlaceNet& n) const {
    int r0 = 1 << 30, r1 = -1, c0 = 1 << 30, c1 = -1;
    for (int b : n.blocks) {
      const TileCoord t = sites_[static_cast<std::size_t>(blocks_[static_cast<std::size_t>(b)].site)].tile;
      r0 = std::min(r0, t.row);
      r1 = std::max(r1, t.row);
      c0 = std::min(c0, t.col);
      c1 = std::max(c1, t.col);
    }
    return (r1 - r0) + (c1 - c0);
  }

  struct Move {
    int a = kNone;
    int b = kNone;  // other block or kNone
    int from = kNone;
    int to = kNone;
  };

  bool propose(Move& m, int rlim) {
    m.a = movable_[uniform_index(rng_, movable_.size())];
    const Block& blk = blocks_[static_cast<std::size_t>(m.a)];
    m.from = blk.site;
    const TileCoord here = sites_[static_cast<std::size_t>(m.from)].tile;
    const auto& per_tile = tile_sites_[static_cast<std::size_t>(blk.cls)];
    for (int attempt = 0; attempt < 8; ++attempt) {
      const int dr = static_cast<int>(uniform_index(rng_, static_cast<std::uint64_t>(2 * rlim + 1))) - rlim;
      const int dc = static_cast<int>(uniform_index(rng_, static_cast<std::uint64_t>(2 * rlim + 1))) - rlim;
      TileCoord t{here.row + dr, here.col + dc};
      if (blk.cls == SiteClass::IoIn || blk.cls == SiteClass::IoOut) {
        // IO lives on the perimeter columns; a row window alone keeps both sides reachable.
        if (t.row < 0 || t.row >= layout_.rows() || io_cols_[static_cast<std::size_t>(t.row)].empty()) {
          continue;
        }
        const auto& cols = io_cols_[static_cast<std::size_t>(t.row)];
        t.col = cols[uniform_index(rng_, cols.size())];
      }
      if (!layout_.in_bounds(t.row, t.col)) {
        continue;
      }
      const auto& cand = per_tile[tile_index(t)];
      if (cand.empty()) {
        continue;
      }
      m.to = cand[uniform_index(rng_, cand.size())];
      if (m.to == m.from) {
        continue;
      }
      m.b = occupant_[static_cast<std::size_t>(m.to)];
      if (m.b != kNone && blocks_[static_cast<std::size_t>(m.b)].fixed) {
        continue;
      }
      return true;
    }
    return false;
  }

  void apply(const Move& m) {
    occupy(m.a, m.to);
    if (m.b != kNone) {
      occupy(m.b, m.from);
    } else {
      occupant_[static_cast<std::size_t>(m.from)] = kNone;
    }
  }

  void undo(const Move& m) {
    occupy(m.a, m.from);
    if (m.b != kNone) {
      occupy(m.b, m.to);
    } else {
      occupant_[static_cast<std::size_t>(m.to)] = kNone;
    }
  }

  /// Applies `m` and returns the cost delta; affected_ holds the touched nets and new costs.
  int evaluate(const Move& m) {
    affected_.clear();
    auto collect = [&](int block) {
      for (int n : blocks_[static_cast<std::size_t>(block)].nets) {
        if (std::none_of(affected_.begin(), affected_.end(), [n](const auto& p) { return p.first == n; })) {
          affected_.emplace_back(n, 0);
        }
      }
    };
    collect(m.a);
    if (m.b != kNone) {
      collect(m.b);
    }
    apply(m);
    int delta = 0;
    for (auto& [n, cost] : affected_) {
      cost = net_cost(nets_[static_cast<std::size_t>(n)]);
      delta += cost - nets_[static_cast<std::size_t>(n)].cost;
    }
    return delta;
  }

  void commit(int delta) {
    for (const auto& [n, cost] : affected_) {
      nets_[static_cast<std::size_t>(n)].cost = cost;
    }
    total_ += delta;
  }

  void anneal() {
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      if (!blocks_[bi].fixed && !blocks_[bi].nets.empty()) {
        movable_.push_back(static_cast<int>(bi));
      }
    }
    if (movable_.empty() || nets_.empty()) {
      return;
    }
    const int max_rlim = std::max(layout_.rows(), layout_.cols());
    int rlim = max_rlim;

    // Start so that a typical uphill move is accepted with probability one half.
    double uphill = 0.0;
    int uphill_n = 0;
    for (std::size_t i = 0; i < movable_.size(); ++i) {
      Move m;
      if (!propose(m, rlim)) {
        continue;
      }
      const int d = evaluate(m);
      undo(m);
      if (d > 0) {
        uphill += d;
        ++uphill_n;
      }
    }
    double t = uphill_n > 0 ? (uphill / uphill_n) / std::log(2.0) : 1.0;

    const std::size_t moves = static_cast<std::size_t>(opt_.moves_per_block) * movable_.size();
    temperatures_ = 0;
    while (temperatures_ < opt_.max_temperatures) {
      std::size_t accepted = 0;
      for (std::size_t i = 0; i < moves; ++i) {
        Move m;
        if (!propose(m, rlim)) {
          continue;
        }
        const int d = evaluate(m);
        if (d <= 0 || uniform_unit(rng_) < std::exp(-d / t)) {
          commit(d);
          ++accepted;
        } else {
          undo(m);
        }
      }
      ++temperatures_;
      const double rate = static_cast<double>(accepted) / static_cast<double>(moves);
      rlim = std::clamp(static_cast<int>(std::lround(rlim * (0.56 + rate))), 1, max_rlim);
      if (t < 0.005 * static_cast<double>(total_) / static_cast<double>(nets_.size())) {
        break;
      }
      t *= opt_.cooling;
    }
    // Greedy quench.
    for (std::size_t i = 0; i < moves; ++i) {
      Move m;
      if (!propose(m, 1)) {
        continue;
      }
      const int d = evaluate(m);
      if (d <= 0) {
        commit(d);
      } else {
        undo(m);
      }
    }
  }

  Placement result() const {
    Placement p;
    p.sites.resize(nl_.cells().size());
    p.packed = packed_;
    for (const Block& b : blocks_) {
      for (CellId c : b.cells) {
        p.sites[c] = sites_[static_cast<std::size_t>(b.site)];
      }
    }
    p.wirelength = static_cast<double>(total_);
    p.temperatures = temperatures_;
    return p;
  }

  const Netlist& nl_;
  const FabricLayout& layout_;
  const PlaceOptions& opt_;
  std::mt19937_64 rng_;
  std::vector<bool> packed_;
  std::vector<int> block_of_;
  std::vector<Block> blocks_;
  std::vector<Site> sites_;
  std::array<std::vector<int>, kClassCount> class_sites_;
  std::vector<std::vector<std::vector<int>>> tile_sites_;
  std::vector<std::vector<int>> io_cols_;  // per row
  std::vector<int> occupant_;
  std::vector<PlaceNet> nets_;
  std::vector<int> movable_;
  std::vector<std::pair<int, int>> affected_;
  long total_ = 0;
  int temperatures_ = 0;
};

}  // namespace

Placement place(const Netlist& netlist, const FabricLayout& layout, const PlaceOptions& options) {
  netlist.validate();
  return Annealer(netlist, layout, options).run();
}

void check_placement(const Netlist& netlist, const FabricLayout& layout, const Placement& placement) {
  auto fail = [](const std::string& msg) { throw Error(Errc::InvalidConfig, "illegal placement: " + msg); };
  if (placement.sites.size() != netlist.cells().size() || placement.packed.size() != netlist.cells().size()) {
    fail("size does not match netlist");
  }
  std::map<Site, std::vector<CellId>> users;
  for (CellId id = 0; id < netlist.cells().size(); ++id) {
    const Cell& c = netlist.cell(id);
    const auto& s = placement.sites[id];
    if (c.kind == CellKind::Const) {
      if (s) {
        fail("constant '" + c.name + "' occupies a site");
      }
      continue;
    }
    if (!s) {
      fail("cell '" + c.name + "' is unplaced");
    }
    if (s->cls != detail::site_class_for(c.kind) || !layout.in_bounds(s->tile.row, s->tile.col)) {
      fail("cell '" + c.name + "' is on an incompatible site");
    }
    const TileKind k = layout.at(s->tile);
    bool ok = false;
    switch (s->cls) {
      case SiteClass::Logic:
        ok = k == TileKind::Lut4AB && s->index >= 0 && s->index < kSlotsPerLogicTile;
        break;
      case SiteClass::Dsp:
        ok = k == TileKind::DspTop && s->tile.row + 1 < layout.rows() &&
             layout.at(s->tile.row + 1, s->tile.col) == TileKind::DspBot && s->index == 0;
        break;
      case SiteClass::IoIn:
      case SiteClass::IoOut:
        ok = (k == TileKind::WestIo || k == TileKind::EastIo) && s->index >= 0 && s->index < kIoBitsPerTile;
        break;
    }
    if (!ok) {
      fail("cell '" + c.name + "' is on a " + std::string(tile_name(k)) + " tile");
    }
    users[*s].push_back(id);
  }
  for (const auto& [site, cells] : users) {
    if (cells.size() == 1) {
      if (netlist.cell(cells[0]).kind == CellKind::Lut4 && placement.packed[cells[0]]) {
        fail("packed LUT '" + netlist.cell(cells[0]).name + "' has no register");
      }
      continue;
    }
    // Only a Dff and the single-fanout Lut4 feeding it may share a slot.
    if (cells.size() != 2) {
      fail("site shared by " + std::to_string(cells.size()) + " cells");
    }
    CellId lut = cells[0];
    CellId ff = cells[1];
    if (netlist.cell(lut).kind != CellKind::Lut4) {
      std::swap(lut, ff);
    }
    const Cell& l = netlist.cell(lut);
    const Cell& f = netlist.cell(ff);
    if (l.kind != CellKind::Lut4 || f.kind != CellKind::Dff || !placement.packed[lut] ||
        f.inputs[0] != l.outputs[0] || netlist.net(l.outputs[0]).sinks.size() != 1) {
      fail("invalid slot sharing between '" + l.name + "' and '" + f.name + "'");
    }
  }
}

}  // namespace efab
