// SPDX-License-Identifier: Apache-2.0
//
// Text tables, CSV and SVG renderings of the reports produced by the other modules.
#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "efab/fabric_model.hpp"
#include "efab/fabric_sim.hpp"
#include "efab/stream_link.hpp"
#include "efab/tree_compiler.hpp"
#include "efab/tree_model.hpp"

namespace efab {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;
};

/// Fixed-width columns, left-aligned first column, right-aligned numbers.
std::string render_text(const Table& table);
/// RFC 4180 quoting; "\n" line ends.
std::string render_csv(const Table& table);

/// Shortest round-trip-safe decimal for doubles (locale independent).
std::string fmt(double v);
std::string fmt(double v, int decimals);

Table census_table(const ResourceCensus& c);

inline constexpr std::array<double, 7> kSweepFrequenciesMhz{10, 25, 50, 100, 125, 200, 250};

struct PowerPoint {
  double frequency_mhz = 0.0;
  double power = 0.0;  // toggles/s x unit energy
};
std::vector<PowerPoint> power_sweep(const ActivityReport& activity,
                                    std::span<const double> frequencies_mhz = kSweepFrequenciesMhz);
/// Coefficient of determination of the least-squares line through the points.
double linear_r2(std::span<const PowerPoint> points);
Table power_table(const ActivityReport& activity, std::span<const PowerPoint> points);

Table ber_table(const BerReport& r);
Table eval_table(std::span<const EvalReport> reports);
Table fit_table(const FitReport& r);
Table equivalence_table(const EquivalenceReport& r);
Table compile_table(const CompiledTree& t);

/// Signal efficiency on x, background rejection on y, one polyline.
std::string roc_svg(std::span<const EvalReport> sweep, const std::string& title, double auc);

}  // namespace efab
