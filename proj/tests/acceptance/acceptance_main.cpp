// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance run: one verdict line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "efab/cad_flow.hpp"
#include "efab/crc.hpp"
#include "efab/designs.hpp"
#include "efab/fabric_model.hpp"
#include "efab/fabric_sim.hpp"
#include "efab/line_codes.hpp"
#include "efab/pixel.hpp"
#include "efab/prbs.hpp"
#include "efab/reports.hpp"
#include "efab/stream_link.hpp"
#include "efab/tree_compiler.hpp"
#include "efab/tree_model.hpp"

using namespace efab;

namespace {

// Wall-clock limits, seconds.
constexpr double kLimitCensus = 1.0;
constexpr double kLimitCounter = 60.0;
constexpr double kLimitLoopback = 60.0;
constexpr double kLimitCodec = 10.0;
constexpr double kLimitEquivalence = 300.0;
constexpr double kLimitFit = 300.0;
constexpr double kLimitPower = 10.0;
constexpr double kLimitClassify = 120.0;

constexpr std::uint64_t kCounterCycles = 100000;
constexpr std::size_t kEquivalenceVectors = 100000;
constexpr int kNarrowWidth = 4;
constexpr int kMaxPipelineDepth = 5;
constexpr double kMaxLatencyNs = 25.0;
constexpr double kR2Tolerance = 1e-12;
constexpr double kMinAuc = 0.75;
constexpr double kMinEfficiency = 0.95;
constexpr double kReproTolerance = 0.005;

constexpr std::size_t kSyntheticTracks = 10000;
constexpr double kTrainFraction = 0.8;
constexpr std::uint64_t kSeed = 1;
constexpr int kReferenceSplits = 9;

struct Verdict {
  enum Kind { Pass, Fail, Skip } kind = Fail;
  std::string detail;
};

Verdict fail(std::string d) { return {Verdict::Fail, std::move(d)}; }
Verdict check(bool ok, std::string d) { return {ok ? Verdict::Pass : Verdict::Fail, std::move(d)}; }

const FabricLayout& cmos28() {
  static const FabricLayout l = builtin_layout("cmos28");
  return l;
}

std::uint32_t west_word(const IoFrame& f, int n) {
  std::uint32_t v = 0;
  for (int b = 0; b < n; ++b) {
    v |= static_cast<std::uint32_t>(f.west_out[static_cast<std::size_t>(b)] & 1U) << b;
  }
  return v;
}

const FlowResult& counter_flow() {
  static const FlowResult f = [] {
    FlowOptions o;
    o.place.pins = counter_pins(16);
    return run_flow(counter_design(16), cmos28(), o);
  }();
  return f;
}

struct Synthetic {
  LabeledFeatures train;
  LabeledFeatures test;
  TreeModel model;
  QuantTreeModel quant;
};

const Synthetic& synthetic() {
  static const Synthetic s = [] {
    Synthetic out;
    const auto [tr, te] = split_dataset(synth_dataset(kSyntheticTracks, kSeed), kTrainFraction, kSeed);
    out.train = featurize(tr);
    out.test = featurize(te);
    TrainOptions o;
    o.max_splits = kReferenceSplits;
    out.model = train_tree(out.train.x, out.train.y, o);
    out.quant = quantize(out.model);
    return out;
  }();
  return s;
}

struct CompiledReferenceTree {
  CompiledTree tree;
  FlowResult flow;
};

const CompiledReferenceTree& reference_tree() {
  static const CompiledReferenceTree c = [] {
    CompileOptions o;
    o.score_threshold = score_threshold(0.4922);
    CompiledReferenceTree out{compile_tree(synthetic().quant, o), {}};
    out.flow = run_flow(out.tree.netlist, cmos28());
    return out;
  }();
  return c;
}

// Same topology and leaves, features folded onto four inputs and thresholds rescaled into
// the signed 4-bit range, so that every input valuation can be enumerated.
QuantTreeModel narrow_variant(const QuantTreeModel& q) {
  std::int32_t widest = 1;
  for (const QuantNode& n : q.nodes) {
    if (!n.is_leaf()) {
      widest = std::max(widest, std::abs(n.threshold.raw));
    }
  }
  const std::int32_t hi = (1 << (kNarrowWidth - 1)) - 1;
  QuantTreeModel out = q;
  for (QuantNode& n : out.nodes) {
    if (!n.is_leaf()) {
      n.feature %= 4;
      n.threshold = Fixed28::from_raw(static_cast<std::int32_t>(
          std::lround(static_cast<double>(n.threshold.raw) * hi / static_cast<double>(widest))));
    }
  }
  return out;
}

// 1 ------------------------------------------------------------------------
Verdict census_criterion() {
  const ResourceCensus a = census(builtin_layout("cmos28"));
  const ResourceCensus b = census(builtin_layout("cmos130"));
  const bool ok = a.logic_cells == 448 && a.dsp_slices == 4 && b.logic_cells == 384 && b.registers == 128 &&
                  b.dsp_slices == 4;
  return check(ok, "cmos28 " + std::to_string(a.logic_cells) + " LUT4 / " + std::to_string(a.dsp_slices) +
                       " DSP; cmos130 " + std::to_string(b.logic_cells) + " LUT4 / " +
                       std::to_string(b.registers) + " registers / " + std::to_string(b.dsp_slices) + " DSP");
}

// 2 ------------------------------------------------------------------------
Verdict counter_criterion() {
  FabricState s = FabricState::load(cmos28(), counter_flow().image);
  const IoFrame in = make_io_frame(cmos28());
  std::uint64_t bad = 0;
  for (std::uint64_t k = 0; k < kCounterCycles; ++k) {
    bad += west_word(s.step(in), 16) != k % 65536;
  }
  return check(bad == 0, std::to_string(kCounterCycles) + " cycles, " + std::to_string(bad) + " mismatches");
}

// 3 ------------------------------------------------------------------------
Verdict loopback_criterion() {
  FlowOptions fo;
  fo.place.pins = loopback_pins();
  const FlowResult f = run_flow(loopback_design(), cmos28(), fo);

  LoopbackOptions clean;
  FabricState a = FabricState::load(cmos28(), f.image);
  const BerReport r = run_loopback(a, clean);

  LoopbackOptions faulty;
  faulty.faults = {{7, 100}};
  FabricState b = FabricState::load(cmos28(), f.image);
  const BerReport g = run_loopback(b, faulty);

  const bool ok = r.frames_received == 1000 && r.bit_errors == 0 && r.crc_errors == 0 &&
                  r.payload_mismatches == 0 && r.stall_cycles > 0 && g.crc_errors == 1 &&
                  g.frames_received == 999 && g.payload_mismatches == 0;
  return check(ok, std::to_string(r.frames_received) + " frames, " + std::to_string(r.bit_errors) +
                       " bit errors, " + std::to_string(r.stall_cycles) + " stall cycles; with one fault: " +
                       std::to_string(g.crc_errors) + " crc-rejected frame(s)");
}

// 4 ------------------------------------------------------------------------
Verdict codec_criterion() {
  int round_trip_errors = 0;
  for (int v = 0; v < 256; ++v) {
    for (Disparity rd : {Disparity::Negative, Disparity::Positive}) {
      const Encoded8b10b e = encode_8b10b(static_cast<std::uint8_t>(v), false, rd);
      const Decoded8b10b d = decode_8b10b(e.symbol, rd);
      round_trip_errors += d.byte != v || d.is_control || d.rd != e.rd;
    }
  }
  // Running disparity over a long random stream stays within one symbol of balance.
  std::mt19937_64 rng(kSeed);
  Disparity rd = Disparity::Negative;
  int balance = 0;
  int lo = 0;
  int hi = 0;
  for (int i = 0; i < 100000; ++i) {
    const Encoded8b10b e = encode_8b10b(static_cast<std::uint8_t>(rng()), false, rd);
    balance += 2 * std::popcount(static_cast<unsigned>(e.symbol)) - 10;
    lo = std::min(lo, balance);
    hi = std::max(hi, balance);
    rd = e.rd;
  }
  const std::uint32_t check_value = crc32(std::string_view("123456789"));

  PrbsGenerator g(0x7F, kPrbs7);
  const std::uint32_t start = g.state();
  int period = 0;
  do {
    g.next_bit();
    ++period;
  } while (g.state() != start && period < 1000);

  const bool ok = round_trip_errors == 0 && lo >= 0 && hi <= 2 && check_value == 0xCBF43926u && period == 127;
  char crc[16];
  std::snprintf(crc, sizeof crc, "0x%08X", check_value);
  return check(ok, "8b10b 512/512 round trips with " + std::to_string(round_trip_errors) +
                       " errors, disparity span [" + std::to_string(lo) + "," + std::to_string(hi) +
                       "]; crc32 check " + crc + "; prbs7 period " + std::to_string(period));
}

// 5 ------------------------------------------------------------------------
Verdict equivalence_criterion() {
  const Synthetic& s = synthetic();
  const CompiledReferenceTree& c = reference_tree();
  const auto vectors = equivalence_vectors(s.quant, kEquivalenceVectors, kSeed);
  const EquivalenceReport r = equivalence_check(c.tree, s.quant, vectors, FabricTarget{&cmos28(), &c.flow});

  const QuantTreeModel narrow = narrow_variant(s.quant);
  CompileOptions no = {};
  no.feature_width = kNarrowWidth;
  const CompiledTree cn = compile_tree(narrow, no);
  const auto all = exhaustive_vectors(narrow, kNarrowWidth);
  const EquivalenceReport rn = equivalence_check(cn, narrow, all);

  const bool shape = s.model.internal_nodes() == kReferenceSplits && s.model.depth() == kMaxTreeDepth;
  const bool ok = shape && r.fabric_checked && r.vectors >= kEquivalenceVectors && r.passed() && rn.passed() &&
                  rn.vectors == all.size();
  return check(ok, "tree " + std::to_string(s.model.internal_nodes()) + " thresholds / depth " +
                       std::to_string(s.model.depth()) + "; fabric " + std::to_string(r.vectors) + " vectors, " +
                       std::to_string(r.mismatches) + " mismatches; 4-bit exhaustive " +
                       std::to_string(rn.vectors) + " vectors, " + std::to_string(rn.mismatches) + " mismatches");
}

// 6 ------------------------------------------------------------------------
Verdict fit_criterion() {
  const CompiledReferenceTree& c = reference_tree();
  const FitReport fit = estimate_resources(c.tree, cmos28());
  check_routing(c.tree.netlist, c.flow.placement, cmos28(), c.flow.routing);
  const bool ok = fit.fits && c.tree.lut_count <= 448 && c.flow.routing.congestion <= 1;
  return check(ok, std::to_string(c.tree.lut_count) + " LUT4 of 448 (" + fmt(100.0 * fit.lut_utilization, 1) +
                       "%), " + std::to_string(c.tree.ff_count) + " FFs, routed in " +
                       std::to_string(c.flow.routing.iterations) + " iteration(s)");
}

// 7 ------------------------------------------------------------------------
Verdict latency_criterion() {
  const CompiledTree& t = reference_tree().tree;
  const double ns = t.latency_ns(kTimingTargetMhz);
  return check(t.pipeline_depth <= kMaxPipelineDepth && ns <= kMaxLatencyNs,
               "pipeline depth " + std::to_string(t.pipeline_depth) + " (" + std::to_string(t.logic_levels) +
                   " LUT levels), " + fmt(ns, 1) + " ns at " + fmt(kTimingTargetMhz) + " MHz");
}

// 8 ------------------------------------------------------------------------
Verdict power_criterion() {
  FabricState s = FabricState::load(cmos28(), counter_flow().image);
  const IoFrame in = make_io_frame(cmos28());
  for (int k = 0; k < 10000; ++k) {
    s.step(in);
  }
  const ActivityReport a = activity_report(s);
  const auto pts = power_sweep(a, kSweepFrequenciesMhz);
  const double r2 = linear_r2(pts);
  double worst = 0.0;
  for (const PowerPoint& p : pts) {
    const double per_mhz = p.power / p.frequency_mhz;
    worst = std::max(worst, std::abs(per_mhz / (pts[0].power / pts[0].frequency_mhz) - 1.0));
  }
  return check(std::abs(r2 - 1.0) <= kR2Tolerance && worst <= kR2Tolerance && a.toggles > 0,
               "R^2 = " + fmt(r2, 15) + " over " + std::to_string(pts.size()) + " frequencies, " +
                   fmt(a.toggles_per_cycle_mean, 3) + " toggles/cycle");
}

// 9 ------------------------------------------------------------------------
Verdict classify_criterion() {
  const Synthetic& s = synthetic();
  const auto p = predict_all(s.model, s.test.x);
  const double auc = roc_auc(p, s.test.y);
  const auto sweep = threshold_sweep(p, s.test.y, 100);
  bool monotone = true;
  std::optional<EvalReport> best;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    if (i > 0) {
      monotone = monotone && sweep[i].signal_efficiency >= sweep[i - 1].signal_efficiency &&
                 sweep[i].background_rejection <= sweep[i - 1].background_rejection;
    }
    const EvalReport& e = sweep[i];
    if (e.signal_efficiency >= kMinEfficiency && e.background_rejection > 0.0 &&
        (!best || e.background_rejection > best->background_rejection)) {
      best = e;
    }
  }
  std::string d = "AUC " + fmt(auc, 4) + ", sweep " + (monotone ? "monotone" : "not monotone");
  if (best) {
    d += "; at p >= " + fmt(best->threshold, 4) + ": efficiency " + fmt(best->signal_efficiency, 4) +
         ", rejection " + fmt(best->background_rejection, 4);
  }
  return check(auc > kMinAuc && monotone && best.has_value(), d);
}

// 10 -----------------------------------------------------------------------
Verdict reproduction_criterion() {
  const char* data = std::getenv("EFAB_PIXEL_DATASET");
  const char* model = std::getenv("EFAB_PAPER_MODEL");
  if (!data || !model || !*data || !*model) {
    return {Verdict::Skip, "set EFAB_PIXEL_DATASET and EFAB_PAPER_MODEL to run"};
  }
  const LabeledFeatures f = featurize(read_tracks(data));
  std::string text;
  {
    std::FILE* fp = std::fopen(model, "rb");
    if (!fp) {
      return fail(std::string("cannot open ") + model);
    }
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, fp)) > 0) {
      text.append(buf, n);
    }
    std::fclose(fp);
  }
  const TreeModel m = import_model(text);
  const QuantTreeModel q = quantize(m);
  struct Target {
    double threshold, efficiency, rejection;
    bool quantized;
  };
  const Target targets[] = {{0.4953, 0.964, 0.058, true}, {0.4922, 0.978, 0.039, true}, {0.4922, 0.9753, 0.0435, false}};
  bool ok = true;
  std::string d;
  for (const Target& t : targets) {
    const EvalReport r = t.quantized ? evaluate(q, f.x, f.y, t.threshold) : evaluate(m, f.x, f.y, t.threshold);
    ok = ok && std::abs(r.signal_efficiency - t.efficiency) <= kReproTolerance &&
         std::abs(r.background_rejection - t.rejection) <= kReproTolerance;
    d += std::string(d.empty() ? "" : "; ") + (t.quantized ? "quantized" : "float") + " @" + fmt(t.threshold, 4) +
         ": " + fmt(100 * r.signal_efficiency, 2) + "% / " + fmt(100 * r.background_rejection, 2) + "%";
  }
  return check(ok, d);
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Verdict()> run;
  };
  const Criterion criteria[] = {
      {1, "resource census", kLimitCensus, census_criterion},
      {2, "counter experiment", kLimitCounter, counter_criterion},
      {3, "loopback experiment", kLimitLoopback, loopback_criterion},
      {4, "codec conformance", kLimitCodec, codec_criterion},
      {5, "compiler equivalence", kLimitEquivalence, equivalence_criterion},
      {6, "resource fit", kLimitFit, fit_criterion},
      {7, "latency", kLimitFit, latency_criterion},
      {8, "power-proxy linearity", kLimitPower, power_criterion},
      {9, "classification quality", kLimitClassify, classify_criterion},
      {10, "conditional reproduction", 0.0, reproduction_criterion},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = fail(std::string("exception: ") + e.what());
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (v.kind == Verdict::Pass && c.limit_s > 0.0 && s > c.limit_s) {
      v = fail(v.detail + "; over the " + fmt(c.limit_s) + " s limit");
    }
    const char* tag = v.kind == Verdict::Pass ? "PASS" : v.kind == Verdict::Skip ? "SKIP" : "FAIL";
    failures += v.kind == Verdict::Fail;
    std::printf("%-4s %2d %-25s %s (%.2f s)\n", tag, c.id, c.name, v.detail.c_str(), s);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
