// SPDX-License-Identifier: Apache-2.0
#include "efab/tree_compiler.hpp"

#include <gtest/gtest.h>

#include "efab/cad_flow.hpp"
#include "efab/logic_builder.hpp"
#include "efab/pixel.hpp"
#include "test_util.hpp"

using namespace efab;

namespace {

const FabricLayout& cmos28() {
  static const FabricLayout l = builtin_layout("cmos28");
  return l;
}

QuantNode inner(int feature, std::int32_t threshold, int left, int right) {
  return QuantNode{feature, Fixed28::from_raw(threshold), left, right, {}};
}

QuantNode leaf(std::int32_t v) { return QuantNode{-1, {}, -1, -1, Fixed28::from_raw(v)}; }

// f0 <= 3 ? (f1 <= -2 ? 5 : -7) : 11, base 1.
QuantTreeModel two_level() {
  QuantTreeModel m;
  m.base_score = Fixed28::from_raw(1);
  m.nodes = {inner(0, 3, 1, 4), inner(1, -2, 2, 3), leaf(5), leaf(-7), leaf(11)};
  return m;
}

// Right-leaning chain of `n` comparisons on feature 0.
QuantTreeModel chain(int n) {
  QuantTreeModel m;
  for (int i = 0; i < n; ++i) {
    const int me = static_cast<int>(m.nodes.size());
    m.nodes.push_back(inner(0, i, me + 1, me + 2));
    m.nodes.push_back(leaf(i + 1));
  }
  m.nodes.push_back(leaf(-1));
  return m;
}

const QuantTreeModel& full_scale() {
  static const QuantTreeModel q = [] {
    const auto [tr, te] = split_dataset(synth_dataset(10000, 1), 0.8, 1);
    const LabeledFeatures f = featurize(tr);
    TrainOptions o;
    o.max_splits = 9;
    return quantize(train_tree(f.x, f.y, o));
  }();
  return q;
}

CompileOptions at_threshold(double tau) {
  CompileOptions o;
  o.score_threshold = score_threshold(tau);
  return o;
}

}  // namespace

TEST(Compile, SingleLeafIsConstant) {
  QuantTreeModel m;
  m.base_score = Fixed28::from_raw(-3);
  m.nodes = {leaf(10)};
  const CompiledTree c = compile_tree(m);
  EXPECT_EQ(c.lut_count, 0);
  EXPECT_EQ(c.comparators, 0);
  EXPECT_EQ(c.pipeline_depth, 0);
  NetlistSimulator sim(c.netlist);
  const auto out = sim.peek(tree_inputs(c, QuantFeatures{}));
  EXPECT_EQ(tree_score(out).raw, 7);
  EXPECT_TRUE(tree_decision(out));  // 7 >= 0
}

TEST(Compile, PortLayout) {
  CompileOptions o;
  o.feature_width = 6;
  const CompiledTree c = compile_tree(two_level(), o);
  ASSERT_EQ(c.netlist.inputs().size(), static_cast<std::size_t>(kNumFeatures * 6));
  ASSERT_EQ(c.netlist.outputs().size(), 29u);
  EXPECT_EQ(c.netlist.cell(c.netlist.inputs()[6]).name, "f1[0]");
  EXPECT_EQ(c.netlist.cell(c.netlist.outputs()[28]).name, "decision");
  QuantFeatures x{};
  x[1] = Fixed28::from_raw(-2);
  const auto in = tree_inputs(c, x);
  EXPECT_EQ(in[6], 0);
  EXPECT_EQ(in[7], 1);
  EXPECT_EQ(in[11], 1);  // sign bit
}

TEST(Compile, DepthOneExhaustiveAtWidthFour) {
  QuantTreeModel m;
  m.nodes = {inner(2, -3, 1, 2), leaf(4), leaf(-9)};
  CompileOptions o;
  o.feature_width = 4;
  const CompiledTree c = compile_tree(m, o);
  EXPECT_EQ(c.comparators, 1);
  const auto v = exhaustive_vectors(m, 4);
  EXPECT_EQ(v.size(), 16u);
  const EquivalenceReport r = equivalence_check(c, m, v);
  EXPECT_EQ(r.vectors, 16u);
  EXPECT_TRUE(r.passed());
}

TEST(Compile, TwoLevelExhaustiveAtWidthFour) {
  CompileOptions o;
  o.feature_width = 4;
  const CompiledTree c = compile_tree(two_level(), o);
  EXPECT_EQ(c.comparators, 2);
  const auto v = exhaustive_vectors(two_level(), 4);
  EXPECT_EQ(v.size(), 256u);
  EXPECT_TRUE(equivalence_check(c, two_level(), v).passed());
}

TEST(Compile, ThresholdsOutsideNarrowRangeFold) {
  QuantTreeModel m;
  m.nodes = {inner(0, -100, 1, 2), leaf(1), inner(1, 100, 3, 4), leaf(2), leaf(3)};
  CompileOptions o;
  o.feature_width = 4;
  const CompiledTree c = compile_tree(m, o);
  EXPECT_EQ(c.comparators, 2);
  EXPECT_TRUE(equivalence_check(c, m, exhaustive_vectors(m, 4)).passed());
  // Both comparisons are constant at this width: the score does not depend on the inputs.
  EXPECT_EQ(c.lut_count, 0);
}

TEST(Compile, FullScaleFitsAndMatches) {
  const QuantTreeModel& q = full_scale();
  const CompiledTree c = compile_tree(q, at_threshold(0.4922));
  const FitReport fit = estimate_resources(c, cmos28());
  EXPECT_TRUE(fit.fits);
  EXPECT_LE(c.lut_count, 448);
  EXPECT_DOUBLE_EQ(fit.lut_utilization, c.lut_count / 448.0);
  const auto v = equivalence_vectors(q, 100000, 7);
  ASSERT_EQ(v.size(), 100000u);
  const EquivalenceReport r = equivalence_check(c, q, v);
  EXPECT_EQ(r.vectors, 100000u);
  EXPECT_TRUE(r.passed()) << r.mismatches;
  EXPECT_FALSE(r.first_index);
}

TEST(Compile, FabricEquivalence) {
  const QuantTreeModel& q = full_scale();
  const CompiledTree c = compile_tree(q, at_threshold(0.4922));
  const FlowResult f = run_flow(c.netlist, cmos28());
  const auto v = equivalence_vectors(q, 3000, 8);
  const EquivalenceReport r = equivalence_check(c, q, v, FabricTarget{&cmos28(), &f});
  EXPECT_TRUE(r.fabric_checked);
  EXPECT_EQ(r.fabric_mismatches, 0u);
  EXPECT_TRUE(r.passed());
}

TEST(Compile, CorruptedLutIsCaught) {
  const QuantTreeModel& q = full_scale();
  CompiledTree c = compile_tree(q, at_threshold(0.4922));
  const Netlist& n = c.netlist;
  const NetId decision = n.cell(n.outputs()[28]).inputs[0];
  const CellId driver = n.net(decision).driver->cell;
  ASSERT_EQ(n.cell(driver).kind, CellKind::Lut4);
  c.netlist.set_truth_table(driver, n.cell(driver).truth_table ^ 0x0001);
  const EquivalenceReport r = equivalence_check(c, q, equivalence_vectors(q, 2000, 3));
  EXPECT_FALSE(r.passed());
  EXPECT_GT(r.mismatches, 0u);
  ASSERT_TRUE(r.first_index);
  ASSERT_TRUE(r.counterexample);
}

TEST(Compile, EmptyVectorSetIsVacuous) {
  const CompiledTree c = compile_tree(two_level());
  const EquivalenceReport r = equivalence_check(c, two_level(), std::span<const QuantFeatures>{});
  EXPECT_EQ(r.vectors, 0u);
  EXPECT_EQ(r.mismatches, 0u);
  EXPECT_TRUE(r.passed());
}

TEST(Compile, PipeliningKeepsResults) {
  const QuantTreeModel& q = full_scale();
  CompileOptions o = at_threshold(0.4922);
  const CompiledTree flat = compile_tree(q, o);
  o.max_lut_depth = 2;
  const CompiledTree piped = compile_tree(q, o);
  EXPECT_GT(piped.pipeline_depth, 0);
  EXPECT_EQ(piped.pipeline_depth, (flat.logic_levels - 1) / 2);
  EXPECT_GT(piped.ff_count, 0);
  EXPECT_EQ(piped.lut_count, flat.lut_count);
  EXPECT_TRUE(equivalence_check(piped, q, equivalence_vectors(q, 5000, 9)).passed());
  EXPECT_DOUBLE_EQ(piped.latency_ns(200.0), piped.pipeline_depth * 5.0);
  EXPECT_DOUBLE_EQ(flat.latency_ns(200.0), 5.0);
}

TEST(Compile, MoreNodesNeverFewerLuts) {
  int prev = -1;
  for (int n = 1; n <= 8; ++n) {
    const CompiledTree c = compile_tree(chain(n));
    EXPECT_GE(c.lut_count, prev) << n;
    EXPECT_EQ(c.comparators, n);
    prev = c.lut_count;
  }
}

TEST(Compile, Limits) {
  EXPECT_NO_THROW(compile_tree(chain(31)));
  EXPECT_ERRC(compile_tree(chain(32)), Errc::TooManyNodes);
  QuantTreeModel bad = chain(1);
  bad.nodes[0].feature = 14;
  EXPECT_ERRC(compile_tree(bad), Errc::FeatureIndexOutOfRange);
  CompileOptions o;
  o.feature_width = 0;
  EXPECT_ERRC(compile_tree(chain(1), o), Errc::InvalidArgument);
  o.feature_width = 29;
  EXPECT_ERRC(compile_tree(chain(1), o), Errc::InvalidArgument);
  EXPECT_ERRC(exhaustive_vectors(full_scale(), 28), Errc::InvalidArgument);
}

TEST(Fit, Boundaries) {
  const FitReport empty = estimate_resources(Netlist{}, cmos28());
  EXPECT_TRUE(empty.fits);
  EXPECT_EQ(empty.lut_utilization, 0.0);
  LogicBuilder b;
  const auto in = b.input_bus("x", 4);
  for (int i = 0; i < 449; ++i) {
    b.output("y" + std::to_string(i), b.lut(in, static_cast<std::uint16_t>(0x1000 + i)));
  }
  const FitReport over = estimate_resources(b.netlist(), cmos28());
  EXPECT_EQ(over.luts, 449);
  EXPECT_FALSE(over.fits);
  EXPECT_GT(over.lut_utilization, 1.0);
}
