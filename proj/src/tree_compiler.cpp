// SPDX-License-Identifier: Apache-2.0
#include "efab/tree_compiler.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "efab/fabric_sim.hpp"
#include "efab/logic_builder.hpp"

namespace efab {
namespace {

constexpr int kChunk = 4;

void check_model(const QuantTreeModel& m) {
  if (m.nodes.empty()) {
    throw Error(Errc::SchemaError, "model has no nodes");
  }
  const auto n = static_cast<int>(m.nodes.size());
  std::vector<bool> seen(m.nodes.size());
  std::vector<int> stack{0};
  int internal = 0;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    if (i < 0 || i >= n || seen[static_cast<std::size_t>(i)]) {
      throw Error(Errc::SchemaError, "malformed tree structure at node " + std::to_string(i));
    }
    seen[static_cast<std::size_t>(i)] = true;
    const QuantNode& q = m.nodes[static_cast<std::size_t>(i)];
    if (q.is_leaf()) {
      continue;
    }
    if (q.feature >= kNumFeatures) {
      throw Error(Errc::FeatureIndexOutOfRange, "feature " + std::to_string(q.feature));
    }
    ++internal;
    stack.push_back(q.left);
    stack.push_back(q.right);
  }
  if (internal > kMaxCompiledNodes) {
    throw Error(Errc::TooManyNodes, std::to_string(internal) + " internal nodes (limit " +
                                        std::to_string(kMaxCompiledNodes) + ")");
  }
}

struct Range {
  std::int64_t lo;
  std::int64_t hi;
};

Range raw_range(int width) { return {-(std::int64_t{1} << (width - 1)), (std::int64_t{1} << (width - 1)) - 1}; }

// Partial comparison over a run of chunks: `lt` = strictly below, `eq` = equal (absent for
// the run holding bit 0, where `lt` already means less-or-equal).
struct Cmp {
  NetId lt;
  NetId eq;
};

class Compiler {
 public:
  Compiler(const QuantTreeModel& m, const CompileOptions& o) : m_(m), o_(o) {}

  Netlist run(int& comparators) {
    std::array<std::vector<NetId>, kNumFeatures> x;
    for (int f = 0; f < kNumFeatures; ++f) {
      x[static_cast<std::size_t>(f)] = b_.input_bus("f" + std::to_string(f), o_.feature_width);
    }
    std::vector<std::pair<NetId, Fixed28>> leaves;  // select, score
    std::vector<Literal> path;
    walk(0, x, path, leaves, comparators);

    std::vector<NetId> score(Fixed28::kTotalBits);
    for (int bit = 0; bit < Fixed28::kTotalBits; ++bit) {
      std::vector<NetId> on;
      for (const auto& [sel, s] : leaves) {
        if ((s.bits() >> bit) & 1U) {
          on.push_back(sel);
        }
      }
      score[static_cast<std::size_t>(bit)] = on.size() == leaves.size() ? b_.one() : b_.or_all(on);
    }
    std::vector<NetId> accept;
    for (const auto& [sel, s] : leaves) {
      if (s >= o_.score_threshold) {
        accept.push_back(sel);
      }
    }
    b_.output_bus("score", score);
    b_.output("decision", accept.size() == leaves.size() ? b_.one() : b_.or_all(accept));
    return b_.take();
  }

 private:
  void walk(int i, const std::array<std::vector<NetId>, kNumFeatures>& x, std::vector<Literal>& path,
            std::vector<std::pair<NetId, Fixed28>>& leaves, int& comparators) {
    const QuantNode& n = m_.nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) {
      leaves.emplace_back(b_.and_all(path), sat_add(m_.base_score, n.leaf));
      return;
    }
    ++comparators;
    const NetId d = less_equal(x[static_cast<std::size_t>(n.feature)], n.threshold.raw);
    path.push_back({d, true});
    walk(n.left, x, path, leaves, comparators);
    path.back().positive = false;
    walk(n.right, x, path, leaves, comparators);
    path.pop_back();
  }

  // x <= c for a sign-extended bus against a constant. Flipping the sign bit turns the signed
  // comparison into an unsigned one; each 4-bit chunk yields (lt, eq) and a balanced tree
  // merges neighbouring chunks.
  NetId less_equal(const std::vector<NetId>& bus, std::int64_t c) {
    const int w = static_cast<int>(bus.size());
    const Range r = raw_range(w);
    if (c >= r.hi) {
      return b_.one();
    }
    if (c < r.lo) {
      return b_.zero();
    }
    const auto k = static_cast<std::uint64_t>(c - r.lo);  // biased constant
    std::vector<Cmp> runs;
    for (int base = 0; base < w; base += kChunk) {
      const int nb = std::min(kChunk, w - base);
      const std::span<const NetId> ins(bus.data() + base, static_cast<std::size_t>(nb));
      const unsigned kc = static_cast<unsigned>(k >> base) & ((1U << nb) - 1U);
      const unsigned flip = (base + nb == w) ? 1U << (nb - 1) : 0U;
      if (base == 0) {
        runs.push_back({b_.lut(ins, [=](unsigned p) { return (p ^ flip) <= kc; }), kNoNet});
      } else {
        runs.push_back({b_.lut(ins, [=](unsigned p) { return (p ^ flip) < kc; }),
                        b_.lut(ins, [=](unsigned p) { return (p ^ flip) == kc; })});
      }
    }
    while (runs.size() > 1) {
      std::vector<Cmp> next;
      for (std::size_t i = 0; i + 1 < runs.size(); i += 2) {
        const Cmp& lo = runs[i];
        const Cmp& hi = runs[i + 1];
        const bool lo_eq = lo.eq != kNoNet;
        std::vector<NetId> ins{hi.lt, hi.eq, lo.lt};
        const NetId lt = b_.lut(ins, [](unsigned p) { return (p & 1U) || ((p & 2U) && (p & 4U)); });
        NetId eq = kNoNet;
        if (lo_eq) {
          const NetId pair[] = {hi.eq, lo.eq};
          eq = b_.lut(pair, std::uint16_t{0b1000});
        }
        next.push_back({lt, eq});
      }
      if (runs.size() % 2 == 1) {
        next.push_back(runs.back());
      }
      runs = std::move(next);
    }
    return runs[0].lt;
  }

  const QuantTreeModel& m_;
  const CompileOptions& o_;
  LogicBuilder b_;
};

// Drops logic that reaches no output and cuts every path into segments of at most `cap`
// LUT levels with register stages; returns the number of stages and the LUT depth.
Netlist pipeline(const Netlist& in, int cap, int& stages, int& levels) {
  const auto& cells = in.cells();
  std::vector<bool> live(cells.size());
  std::vector<CellId> stack;
  for (CellId id = 0; id < cells.size(); ++id) {
    if (cells[id].kind != CellKind::Lut4) {
      live[id] = true;
      if (cells[id].kind == CellKind::OutPort) {
        stack.push_back(id);
      }
    }
  }
  while (!stack.empty()) {
    const CellId id = stack.back();
    stack.pop_back();
    for (NetId n : cells[id].inputs) {
      const auto& d = in.net(n).driver;
      if (d && !live[d->cell]) {
        live[d->cell] = true;
        stack.push_back(d->cell);
      }
    }
  }

  std::vector<int> level(in.nets().size(), 0);
  levels = 0;
  for (CellId id : topological_luts(in)) {
    if (!live[id]) {
      continue;
    }
    int l = 0;
    for (NetId n : cells[id].inputs) {
      l = std::max(l, level[n]);
    }
    level[cells[id].outputs[0]] = l + 1;
    levels = std::max(levels, l + 1);
  }
  auto stage_of = [&](NetId n) { return level[n] == 0 ? 0 : (level[n] - 1) / cap; };
  stages = levels == 0 ? 0 : (levels - 1) / cap;

  Netlist out;
  for (const Net& n : in.nets()) {
    out.add_net(n.name);
  }
  std::set<NetId> constant;
  for (const Cell& c : cells) {
    if (c.kind == CellKind::Const) {
      constant.insert(c.outputs[0]);
    }
  }
  std::map<std::pair<NetId, int>, NetId> delayed;
  auto delay = [&](NetId n, int want) {
    NetId cur = n;
    if (constant.count(n)) {
      return cur;
    }
    for (int s = stage_of(n); s < want; ++s) {
      auto [it, fresh] = delayed.try_emplace({n, s + 1}, kNoNet);
      if (fresh) {
        const std::string name = "pipe" + std::to_string(s + 1) + "_n" + std::to_string(n);
        it->second = out.add_net(name + "_q");
        out.add_cell(Cell{CellKind::Dff, name, 0, false, {cur}, {it->second}});
      }
      cur = it->second;
    }
    return cur;
  };
  for (CellId id = 0; id < cells.size(); ++id) {
    if (!live[id]) {
      continue;
    }
    Cell c = cells[id];
    const int at = c.kind == CellKind::Lut4 ? stage_of(c.outputs[0]) : stages;
    if (c.kind == CellKind::Lut4 || c.kind == CellKind::OutPort) {
      for (NetId& n : c.inputs) {
        n = delay(n, at);
      }
    }
    out.add_cell(std::move(c));
  }
  return out;
}

std::int64_t sign_extend(std::uint64_t v, int width) {
  const std::uint64_t m = std::uint64_t{1} << (width - 1);
  v &= (m << 1) - 1;
  return static_cast<std::int64_t>(v ^ m) - static_cast<std::int64_t>(m);
}

}  // namespace

double CompiledTree::latency_ns(double clock_mhz) const {
  // A purely combinational tree still needs one clock period to settle.
  return std::max(1, pipeline_depth) * 1000.0 / clock_mhz;
}

CompiledTree compile_tree(const QuantTreeModel& model, const CompileOptions& options) {
  if (options.feature_width < 1 || options.feature_width > Fixed28::kTotalBits) {
    throw Error(Errc::InvalidArgument, "feature width must be in 1..28");
  }
  if (options.max_lut_depth < 1) {
    throw Error(Errc::InvalidArgument, "LUT depth cap must be positive");
  }
  check_model(model);
  CompiledTree t;
  t.feature_width = options.feature_width;
  t.score_threshold = options.score_threshold;
  Compiler c(model, options);
  const Netlist flat = c.run(t.comparators);
  t.netlist = pipeline(flat, options.max_lut_depth, t.pipeline_depth, t.logic_levels);
  t.netlist.validate();
  t.lut_count = t.netlist.count(CellKind::Lut4);
  t.ff_count = t.netlist.count(CellKind::Dff);
  return t;
}

FitReport estimate_resources(const Netlist& netlist, const FabricLayout& layout) {
  FitReport r;
  r.capacity = census(layout);
  r.luts = netlist.count(CellKind::Lut4);
  r.ffs = netlist.count(CellKind::Dff);
  r.input_bits = static_cast<int>(netlist.inputs().size());
  r.output_bits = static_cast<int>(netlist.outputs().size());
  auto frac = [](int used, int cap) { return cap > 0 ? static_cast<double>(used) / cap : (used > 0 ? 1e9 : 0.0); };
  r.lut_utilization = frac(r.luts, r.capacity.logic_cells);
  r.ff_utilization = frac(r.ffs, r.capacity.flip_flops);
  r.io_in_utilization = frac(r.input_bits, r.capacity.io_input_bits);
  r.io_out_utilization = frac(r.output_bits, r.capacity.io_output_bits);
  r.fits = r.luts <= r.capacity.logic_cells && r.ffs <= r.capacity.flip_flops &&
           r.input_bits <= r.capacity.io_input_bits && r.output_bits <= r.capacity.io_output_bits;
  return r;
}

FitReport estimate_resources(const CompiledTree& compiled, const FabricLayout& layout) {
  return estimate_resources(compiled.netlist, layout);
}

std::vector<std::uint8_t> tree_inputs(const CompiledTree& compiled, const QuantFeatures& x) {
  const int w = compiled.feature_width;
  const Range r = raw_range(w);
  std::vector<std::uint8_t> in;
  in.reserve(static_cast<std::size_t>(kNumFeatures * w));
  for (const Fixed28& v : x) {
    if (v.raw < r.lo || v.raw > r.hi) {
      throw Error(Errc::InvalidArgument, "feature value does not fit the compiled width");
    }
    for (int b = 0; b < w; ++b) {
      in.push_back(static_cast<std::uint8_t>((static_cast<std::uint32_t>(v.raw) >> b) & 1U));
    }
  }
  return in;
}

Fixed28 tree_score(std::span<const std::uint8_t> outputs) {
  std::uint64_t v = 0;
  for (int b = 0; b < Fixed28::kTotalBits; ++b) {
    v |= std::uint64_t{outputs[static_cast<std::size_t>(b)]} << b;
  }
  return Fixed28::from_raw(static_cast<std::int32_t>(sign_extend(v, Fixed28::kTotalBits)));
}

bool tree_decision(std::span<const std::uint8_t> outputs) { return outputs[Fixed28::kTotalBits] != 0; }

EquivalenceReport equivalence_check(const CompiledTree& compiled, const QuantTreeModel& model,
                                    std::span<const QuantFeatures> vectors, const FabricTarget& fabric) {
  EquivalenceReport rep;
  if (vectors.empty()) {
    return rep;
  }
  NetlistSimulator golden(compiled.netlist);
  std::optional<FabricState> fab;
  std::optional<PortBinding> ports;
  if (fabric.layout && fabric.flow) {
    fab.emplace(FabricState::load(*fabric.layout, fabric.flow->image));
    ports.emplace(compiled.netlist, fabric.flow->placement, *fabric.layout);
    rep.fabric_checked = true;
  }
  const std::size_t lag = static_cast<std::size_t>(compiled.pipeline_depth);
  const QuantFeatures idle{};
  for (std::size_t cyc = 0; cyc < vectors.size() + lag; ++cyc) {
    const auto in = tree_inputs(compiled, cyc < vectors.size() ? vectors[cyc] : idle);
    const auto got = golden.step(in);
    std::optional<std::vector<std::uint8_t>> got_fab;
    if (fab) {
      got_fab = ports->from_frame(fab->step(ports->to_frame(in)));
    }
    if (cyc < lag) {
      continue;
    }
    const std::size_t i = cyc - lag;
    const Fixed28 want = predict_quantized(model, vectors[i]).score;
    const bool want_dec = want >= compiled.score_threshold;
    auto bad = [&](const std::vector<std::uint8_t>& o) { return tree_score(o) != want || tree_decision(o) != want_dec; };
    const bool nl_bad = bad(got);
    const bool fab_bad = got_fab && bad(*got_fab);
    ++rep.vectors;
    rep.netlist_mismatches += nl_bad;
    rep.fabric_mismatches += fab_bad;
    if (nl_bad || fab_bad) {
      if (!rep.first_index) {
        rep.first_index = i;
        rep.counterexample = vectors[i];
        rep.expected_score = want;
        rep.observed_score = tree_score(nl_bad ? got : *got_fab);
      }
      ++rep.mismatches;
    }
  }
  return rep;
}

std::vector<QuantFeatures> equivalence_vectors(const QuantTreeModel& model, std::size_t n, std::uint64_t seed,
                                               int feature_width) {
  const Range r = raw_range(feature_width);
  std::array<std::vector<std::int64_t>, kNumFeatures> cuts;
  for (const QuantNode& q : model.nodes) {
    if (!q.is_leaf()) {
      cuts[static_cast<std::size_t>(q.feature)].push_back(q.threshold.raw);
    }
  }
  std::mt19937_64 rng(seed);
  const auto span = static_cast<std::uint64_t>(r.hi - r.lo + 1);
  std::vector<QuantFeatures> out(n);
  for (QuantFeatures& v : out) {
    for (std::size_t f = 0; f < v.size(); ++f) {
      std::int64_t raw = r.lo + static_cast<std::int64_t>(rng() % span);
      if (!cuts[f].empty() && rng() % 3 != 0) {
        raw = cuts[f][rng() % cuts[f].size()] + static_cast<std::int64_t>(rng() % 7) - 3;
      }
      v[f] = Fixed28::from_raw(static_cast<std::int32_t>(std::clamp(raw, r.lo, r.hi)));
    }
  }
  return out;
}

std::vector<QuantFeatures> exhaustive_vectors(const QuantTreeModel& model, int feature_width, std::size_t limit) {
  std::vector<int> used;
  for (const QuantNode& q : model.nodes) {
    if (!q.is_leaf() && std::find(used.begin(), used.end(), q.feature) == used.end()) {
      used.push_back(q.feature);
    }
  }
  const std::size_t bits = used.size() * static_cast<std::size_t>(feature_width);
  if (bits >= 63 || (std::size_t{1} << bits) > limit) {
    throw Error(Errc::InvalidArgument, "exhaustive space of 2^" + std::to_string(bits) + " vectors is too large");
  }
  const std::size_t n = std::size_t{1} << bits;
  std::vector<QuantFeatures> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t u = 0; u < used.size(); ++u) {
      const auto raw = sign_extend(k >> (u * static_cast<std::size_t>(feature_width)), feature_width);
      out[k][static_cast<std::size_t>(used[u])] = Fixed28::from_raw(static_cast<std::int32_t>(raw));
    }
  }
  return out;
}

}  // namespace efab
