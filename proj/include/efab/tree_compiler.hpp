// SPDX-License-Identifier: Apache-2.0
//
// Quantized tree -> LUT4 netlist: constant comparators, one-hot leaf select, score encoder.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "efab/cad_flow.hpp"
#include "efab/fabric_model.hpp"
#include "efab/netlist.hpp"
#include "efab/tree_model.hpp"

namespace efab {

inline constexpr int kMaxCompiledNodes = 31;
inline constexpr int kDefaultLutDepthCap = 8;
inline constexpr double kTimingTargetMhz = 200.0;

struct CompileOptions {
  /// Width of each feature input bus. Narrower buses carry sign-extended raw values, which
  /// keeps exhaustive enumeration tractable; 28 is the hardware width.
  int feature_width = Fixed28::kTotalBits;
  /// Combinational LUT levels allowed between register stages.
  int max_lut_depth = kDefaultLutDepthCap;
  /// decision = (score >= score_threshold); raw 0 corresponds to probability 0.5.
  Fixed28 score_threshold{};
};

/// Ports: f0[0..w) ... f13[0..w) (LSB first), then score[0..28) and decision.
struct CompiledTree {
  Netlist netlist;
  int lut_count = 0;
  int ff_count = 0;
  int comparators = 0;
  /// Register stages between inputs and outputs (0 = purely combinational).
  int pipeline_depth = 0;
  int logic_levels = 0;
  int feature_width = Fixed28::kTotalBits;
  Fixed28 score_threshold{};

  double latency_ns(double clock_mhz = kTimingTargetMhz) const;
};

/// Throws TooManyNodes, InvalidArgument (bad options) or the model's validation errors.
CompiledTree compile_tree(const QuantTreeModel& model, const CompileOptions& options = {});

struct FitReport {
  int luts = 0;
  int ffs = 0;
  int input_bits = 0;
  int output_bits = 0;
  ResourceCensus capacity;
  bool fits = false;
  double lut_utilization = 0.0;
  double ff_utilization = 0.0;
  double io_in_utilization = 0.0;
  double io_out_utilization = 0.0;
};

FitReport estimate_resources(const CompiledTree& compiled, const FabricLayout& layout);
FitReport estimate_resources(const Netlist& netlist, const FabricLayout& layout);

/// Input valuation (netlist port order) for one feature vector at the compiled width.
/// Raw values must be representable in that width.
std::vector<std::uint8_t> tree_inputs(const CompiledTree& compiled, const QuantFeatures& x);
/// Raw score from a netlist output valuation (sign-extended from 28 bits), and decision bit.
Fixed28 tree_score(std::span<const std::uint8_t> outputs);
bool tree_decision(std::span<const std::uint8_t> outputs);

/// Optional placed-and-routed image for the fabric-level comparison.
struct FabricTarget {
  const FabricLayout* layout = nullptr;
  const FlowResult* flow = nullptr;
};

struct EquivalenceReport {
  std::uint64_t vectors = 0;
  std::uint64_t mismatches = 0;
  std::uint64_t netlist_mismatches = 0;
  std::uint64_t fabric_mismatches = 0;
  bool fabric_checked = false;
  std::optional<std::uint64_t> first_index;
  std::optional<QuantFeatures> counterexample;
  Fixed28 expected_score{};
  Fixed28 observed_score{};
  bool passed() const { return mismatches == 0; }
};

/// Streams the vectors back to back through the pipeline (netlist_sim, plus fabric-sim when
/// `fabric` is set) and compares score and decision against predict_quantized.
EquivalenceReport equivalence_check(const CompiledTree& compiled, const QuantTreeModel& model,
                                    std::span<const QuantFeatures> vectors,
                                    const FabricTarget& fabric = {});

/// Test vectors mixing uniform raw values and values within a few LSBs of each threshold.
std::vector<QuantFeatures> equivalence_vectors(const QuantTreeModel& model, std::size_t n, std::uint64_t seed,
                                               int feature_width = Fixed28::kTotalBits);
/// Every valuation of the features the model reads, others held at zero. Throws
/// InvalidArgument when the space exceeds `limit` vectors.
std::vector<QuantFeatures> exhaustive_vectors(const QuantTreeModel& model, int feature_width,
                                              std::size_t limit = std::size_t{1} << 24);

}  // namespace efab
