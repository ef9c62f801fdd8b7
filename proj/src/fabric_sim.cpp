// SPDX-License-Identifier: Apache-2.0
#include "efab/fabric_sim.hpp"

#include <algorithm>
#include <bit>
#include <random>

#include "efab/error.hpp"

namespace efab {
namespace {

enum class NodeKind : std::uint8_t { Const0, Const1, Input, State, Mux, Lut };

struct GraphNode {
  NodeKind kind = NodeKind::Const0;
  std::uint16_t truth = 0;
  std::uint32_t in[4] = {0, 0, 0, 0};
};

int input_count(const GraphNode& n) {
  switch (n.kind) {
    case NodeKind::Mux:
      return 1;
    case NodeKind::Lut:
      return 4;
    default:
      return 0;
  }
}

struct TileNodes {
  std::uint32_t sink_base = 0;
  std::uint32_t source_base = 0;  // LUT4AB: 8 LUT nodes then 8 register nodes
};

}  // namespace

IoFrame make_io_frame(const FabricLayout& layout) {
  IoFrame f;
  const std::size_t west = layout.io_tiles(TileKind::WestIo).size() * kIoBitsPerTile;
  const std::size_t east = layout.io_tiles(TileKind::EastIo).size() * kIoBitsPerTile;
  f.west_in.assign(west, 0);
  f.west_out.assign(west, 0);
  f.east_in.assign(east, 0);
  f.east_out.assign(east, 0);
  return f;
}

FabricState FabricState::load(const FabricLayout& layout, std::span<const std::uint8_t> image,
                              LoadOptions options) {
  FabricState st;
  st.layout_ = std::make_shared<const FabricLayout>(layout);
  st.config_ = decode_bitstream(image, layout);
  for (TileKind k : layout.grid()) {
    if (is_configurable(k) && !is_routable(k)) {
      throw Error(Errc::NotSimulatable, "layout '" + layout.name() + "' contains " +
                                            std::string(tile_name(k)) +
                                            " tiles, which are census-only");
    }
  }

  const int rows = layout.rows();
  const int cols = layout.cols();
  std::vector<GraphNode> g(2);
  g[1].kind = NodeKind::Const1;
  std::vector<TileNodes> tiles(static_cast<std::size_t>(rows * cols));
  auto tile_index = [cols](TileCoord c) { return static_cast<std::size_t>(c.row * cols + c.col); };

  // Allocate nodes.
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const TileKind k = layout.at(r, c);
      if (!is_routable(k)) {
        continue;
      }
      const SwitchGeometry geo = switch_geometry(k);
      TileNodes& tn = tiles[tile_index({r, c})];
      tn.sink_base = static_cast<std::uint32_t>(g.size());
      g.resize(g.size() + static_cast<std::size_t>(geo.num_sinks()), GraphNode{NodeKind::Mux});
      tn.source_base = static_cast<std::uint32_t>(g.size());
      if (k == TileKind::Lut4AB) {
        g.resize(g.size() + kSlotsPerLogicTile, GraphNode{NodeKind::Lut});
        g.resize(g.size() + kSlotsPerLogicTile, GraphNode{NodeKind::State});
      } else if (k == TileKind::DspTop || k == TileKind::DspBot) {
        g.resize(g.size() + kDspHalfAccBits, GraphNode{NodeKind::State});
      } else {
        g.resize(g.size() + kIoBitsPerTile, GraphNode{NodeKind::Input});
      }
    }
  }

  auto local_source_node = [&](TileCoord t, int j) -> std::uint32_t {
    const TileNodes& tn = tiles[tile_index(t)];
    if (layout.at(t) == TileKind::Lut4AB) {
      const bool registered = lut_slot(st.config_.at(t), j).registered;
      return tn.source_base + static_cast<std::uint32_t>(registered ? kSlotsPerLogicTile + j : j);
    }
    return tn.source_base + static_cast<std::uint32_t>(j);
  };

  // Wire up mux selections and LUT functions.
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const TileCoord t{r, c};
      const TileKind k = layout.at(t);
      if (!is_routable(k)) {
        continue;
      }
      const SwitchGeometry geo = switch_geometry(k);
      const BitVector& payload = st.config_.at(t);
      const TileNodes& tn = tiles[tile_index(t)];
      for (int s = 0; s < geo.num_sinks(); ++s) {
        const int sel = mux_select(payload, k, s);
        std::uint32_t src = 0;
        if (sel == 1) {
          src = 1;
        } else if (sel >= 2 && sel < SwitchGeometry::local_source_base()) {
          const auto side = static_cast<Side>((sel - 2) / kChannelWidth);
          const int track = (sel - 2) % kChannelWidth;
          if (const auto nb = layout.routable_neighbor(t, side)) {
            const SwitchGeometry ng = switch_geometry(layout.at(*nb));
            src = tiles[tile_index(*nb)].sink_base +
                  static_cast<std::uint32_t>(ng.track_sink(opposite(side), track));
          }
        } else if (sel >= SwitchGeometry::local_source_base()) {
          const int j = sel - SwitchGeometry::local_source_base();
          if (j >= geo.local_sources) {
            throw Error(Errc::InvalidConfig, "mux select " + std::to_string(sel) + " out of range at (" +
                                                 std::to_string(r) + "," + std::to_string(c) + ")");
          }
          src = local_source_node(t, j);
        }
        g[tn.sink_base + static_cast<std::uint32_t>(s)].in[0] = src;
      }
      if (k == TileKind::Lut4AB) {
        for (int slot = 0; slot < kSlotsPerLogicTile; ++slot) {
          GraphNode& n = g[tn.source_base + static_cast<std::uint32_t>(slot)];
          n.truth = lut_slot(payload, slot).truth_table;
          for (int p = 0; p < 4; ++p) {
            n.in[p] = tn.sink_base + static_cast<std::uint32_t>(4 * slot + p);
          }
        }
      }
    }
  }

  // Topological order over the configured graph.
  const std::size_t n_nodes = g.size();
  std::vector<std::vector<std::uint32_t>> fanout(n_nodes);
  std::vector<int> pending(n_nodes, 0);
  for (std::uint32_t i = 0; i < n_nodes; ++i) {
    for (int p = 0; p < input_count(g[i]); ++p) {
      fanout[g[i].in[p]].push_back(i);
      ++pending[i];
    }
  }
  std::vector<std::uint32_t> ready;
  for (std::uint32_t i = 0; i < n_nodes; ++i) {
    if (pending[i] == 0) {
      ready.push_back(i);
    }
  }
  std::mt19937_64 rng(options.order_seed);
  std::vector<std::uint32_t> order;
  order.reserve(n_nodes);
  while (!ready.empty()) {
    std::size_t pick = 0;
    if (options.order_seed != 0) {
      pick = static_cast<std::size_t>(rng() % ready.size());
    }
    const std::uint32_t id = ready[pick];
    ready[pick] = ready.back();
    ready.pop_back();
    order.push_back(id);
    for (std::uint32_t f : fanout[id]) {
      if (--pending[f] == 0) {
        ready.push_back(f);
      }
    }
  }
  if (order.size() != n_nodes) {
    throw Error(Errc::CombinationalLoop, "configured routing graph contains a combinational cycle");
  }

  // Constant folding; whatever remains is evaluated every cycle.
  std::vector<int> const_val(n_nodes, -1);
  const_val[0] = 0;
  const_val[1] = 1;
  for (std::uint32_t id : order) {
    const GraphNode& n = g[id];
    if (n.kind == NodeKind::Mux) {
      const_val[id] = const_val[n.in[0]];
    } else if (n.kind == NodeKind::Lut) {
      if (n.truth == 0 || n.truth == 0xFFFF) {
        const_val[id] = n.truth ? 1 : 0;
      } else if (std::all_of(n.in, n.in + 4, [&](std::uint32_t s) { return const_val[s] >= 0; })) {
        unsigned idx = 0;
        for (int p = 0; p < 4; ++p) {
          idx |= static_cast<unsigned>(const_val[n.in[p]]) << p;
        }
        const_val[id] = eval_lut4(n.truth, idx) ? 1 : 0;
      }
    }
  }
  st.values_.assign(n_nodes, 0);
  for (std::uint32_t id = 0; id < n_nodes; ++id) {
    if (const_val[id] > 0) {
      st.values_[id] = 1;
    }
  }
  for (std::uint32_t id : order) {
    const GraphNode& n = g[id];
    if (const_val[id] >= 0 || (n.kind != NodeKind::Mux && n.kind != NodeKind::Lut)) {
      continue;
    }
    EvalNode e{n.kind == NodeKind::Mux ? Op::Mux : Op::Lut, n.truth, id,
               {n.in[0], n.in[1], n.in[2], n.in[3]}};
    st.eval_.push_back(e);
  }

  // Registers, DSP slices and IO.
  std::uint32_t ff_index = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const TileCoord t{r, c};
      const TileKind k = layout.at(t);
      const TileNodes& tn = tiles[tile_index(t)];
      if (k == TileKind::Lut4AB) {
        for (int slot = 0; slot < kSlotsPerLogicTile; ++slot, ++ff_index) {
          if (lut_slot(st.config_.at(t), slot).registered) {
            st.registers_.push_back({tn.source_base + static_cast<std::uint32_t>(slot),
                                     tn.source_base + static_cast<std::uint32_t>(kSlotsPerLogicTile + slot),
                                     ff_index});
          }
        }
      } else if (k == TileKind::DspTop && r + 1 < rows && layout.at(r + 1, c) == TileKind::DspBot) {
        const TileNodes& bot = tiles[tile_index({r + 1, c})];
        DspSlice d{};
        d.enabled = st.config_.at(t).get(0);
        for (int i = 0; i < kDspOperandBits; ++i) {
          d.a[i] = tn.sink_base + static_cast<std::uint32_t>(i);
          d.b[i] = bot.sink_base + static_cast<std::uint32_t>(i);
        }
        for (int i = 0; i < kDspHalfAccBits; ++i) {
          d.acc[i] = tn.source_base + static_cast<std::uint32_t>(i);
          d.acc[kDspHalfAccBits + i] = bot.source_base + static_cast<std::uint32_t>(i);
        }
        st.dsps_.push_back(d);
      } else if (k == TileKind::WestIo || k == TileKind::EastIo) {
        auto& ins = k == TileKind::WestIo ? st.west_in_nodes_ : st.east_in_nodes_;
        auto& outs = k == TileKind::WestIo ? st.west_out_nodes_ : st.east_out_nodes_;
        for (int b = 0; b < kIoBitsPerTile; ++b) {
          ins.push_back(tn.source_base + static_cast<std::uint32_t>(b));
          outs.push_back(tn.sink_base + static_cast<std::uint32_t>(b));
        }
      }
    }
  }
  st.ff_state_.assign(static_cast<std::size_t>(census(layout).flip_flops), 0);
  st.dsp_state_.assign(st.dsps_.size(), 0);
  st.reset();
  return st;
}

void FabricState::reset() {
  std::fill(ff_state_.begin(), ff_state_.end(), 0);
  std::fill(dsp_state_.begin(), dsp_state_.end(), 0);
  cycle_ = 0;
  toggles_ = 0;
  ff_toggles_ = 0;
  settle(make_io_frame(*layout_));
  prev_ = values_;
}

void FabricState::settle(const IoFrame& in) {
  if (in.west_in.size() != west_in_nodes_.size() || in.east_in.size() != east_in_nodes_.size()) {
    throw Error(Errc::InvalidArgument, "IoFrame input widths do not match the layout");
  }
  for (std::size_t i = 0; i < west_in_nodes_.size(); ++i) {
    values_[west_in_nodes_[i]] = in.west_in[i] & 1U;
  }
  for (std::size_t i = 0; i < east_in_nodes_.size(); ++i) {
    values_[east_in_nodes_[i]] = in.east_in[i] & 1U;
  }
  for (const Register& reg : registers_) {
    values_[reg.q] = ff_state_[reg.ff_index];
  }
  for (std::size_t i = 0; i < dsps_.size(); ++i) {
    for (int b = 0; b < kDspAccBits; ++b) {
      values_[dsps_[i].acc[b]] = (dsp_state_[i] >> b) & 1U;
    }
  }
  std::uint8_t* v = values_.data();
  for (const EvalNode& e : eval_) {
    if (e.op == Op::Mux) {
      v[e.out] = v[e.in[0]];
    } else {
      const unsigned idx = v[e.in[0]] | (v[e.in[1]] << 1) | (v[e.in[2]] << 2) | (v[e.in[3]] << 3);
      v[e.out] = eval_lut4(e.truth, idx);
    }
  }
}

void FabricState::sample(IoFrame& out) const {
  out.west_out.resize(west_out_nodes_.size());
  out.east_out.resize(east_out_nodes_.size());
  for (std::size_t i = 0; i < west_out_nodes_.size(); ++i) {
    out.west_out[i] = values_[west_out_nodes_[i]];
  }
  for (std::size_t i = 0; i < east_out_nodes_.size(); ++i) {
    out.east_out[i] = values_[east_out_nodes_[i]];
  }
}

IoFrame FabricState::peek(const IoFrame& in) {
  settle(in);
  IoFrame out = in;
  sample(out);
  return out;
}

IoFrame FabricState::step(const IoFrame& in) {
  settle(in);
  IoFrame out = in;
  sample(out);
  for (const EvalNode& e : eval_) {
    toggles_ += values_[e.out] != prev_[e.out];
    prev_[e.out] = values_[e.out];
  }
  for (const Register& reg : registers_) {
    const std::uint8_t d = values_[reg.d];
    if (d != ff_state_[reg.ff_index]) {
      ++ff_toggles_;
      ++toggles_;
      ff_state_[reg.ff_index] = d;
    }
  }
  for (std::size_t i = 0; i < dsps_.size(); ++i) {
    if (!dsps_[i].enabled) {
      continue;
    }
    unsigned a = 0;
    unsigned b = 0;
    for (int k = 0; k < kDspOperandBits; ++k) {
      a |= unsigned{values_[dsps_[i].a[k]]} << k;
      b |= unsigned{values_[dsps_[i].b[k]]} << k;
    }
    const std::uint32_t next = dsp_mac(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b), dsp_state_[i]);
    toggles_ += static_cast<std::uint64_t>(std::popcount(next ^ dsp_state_[i]));
    dsp_state_[i] = next;
  }
  ++cycle_;
  return out;
}

FabricState load(const FabricLayout& layout, std::span<const std::uint8_t> image, LoadOptions options) {
  return FabricState::load(layout, image, options);
}

IoFrame step(FabricState& state, const IoFrame& io) { return state.step(io); }

ActivityReport activity_report(const FabricState& state) {
  if (state.cycle_count() == 0) {
    throw Error(Errc::NoCyclesRun, "activity report requested before any cycle was run");
  }
  ActivityReport r;
  r.cycles = state.cycle_count();
  r.toggles = state.toggle_count();
  r.ff_toggles = state.ff_toggle_count();
  r.toggles_per_cycle_mean = static_cast<double>(r.toggles) / static_cast<double>(r.cycles);
  return r;
}

VcdWriter::VcdWriter(std::ostream& out, std::vector<std::string> names, const std::string& timescale)
    : out_(out), last_(names.size(), 2) {
  out_ << "$timescale " << timescale << " $end\n$scope module fabric $end\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::string id;
    std::size_t v = i;
    do {
      id += static_cast<char>('!' + v % 94);
      v /= 94;
    } while (v);
    ids_.push_back(id);
    std::string name = names[i];
    std::replace(name.begin(), name.end(), ' ', '_');
    out_ << "$var wire 1 " << id << ' ' << name << " $end\n";
  }
  out_ << "$upscope $end\n$enddefinitions $end\n";
}

void VcdWriter::sample(std::uint64_t time, std::span<const std::uint8_t> values) {
  bool stamped = false;
  for (std::size_t i = 0; i < ids_.size() && i < values.size(); ++i) {
    const std::uint8_t v = values[i] & 1U;
    if (!first_ && v == last_[i]) {
      continue;
    }
    if (!stamped) {
      out_ << '#' << time << '\n';
      stamped = true;
    }
    out_ << static_cast<char>('0' + v) << ids_[i] << '\n';
    last_[i] = v;
  }
  first_ = false;
}

}  // namespace efab
