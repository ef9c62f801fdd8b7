// SPDX-License-Identifier: Apache-2.0
#include "efab/reports.hpp"

#include <gtest/gtest.h>

#include <regex>

using namespace efab;

TEST(Csv, QuotesOnlyWhenNeeded) {
  const Table t{{"a", "b"}, {{"plain", "with,comma"}, {"say \"hi\"", "two\nlines"}}};
  EXPECT_EQ(render_csv(t), "a,b\nplain,\"with,comma\"\n\"say \"\"hi\"\"\",\"two\nlines\"\n");
}

TEST(Text, AlignsColumns) {
  const Table t{{"name", "value"}, {{"x", "1"}, {"longer", "1234"}}};
  EXPECT_EQ(render_text(t),
            "name    value\n"
            "-------------\n"
            "x           1\n"
            "longer   1234\n");
}

TEST(Format, Numbers) {
  EXPECT_EQ(fmt(0.5), "0.5");
  EXPECT_EQ(fmt(100.0), "100");
  EXPECT_EQ(fmt(0.123456, 3), "0.123");
  EXPECT_EQ(fmt(2.0, 1), "2.0");
}

TEST(Census, TableRows) {
  ResourceCensus c;
  c.logic_cells = 448;
  c.dsp_slices = 4;
  const std::string s = render_text(census_table(c));
  EXPECT_TRUE(std::regex_search(s, std::regex("logic_cells +448")));
  EXPECT_TRUE(std::regex_search(s, std::regex("dsp_slices +4")));
}

TEST(Power, SweepIsExactlyLinear) {
  ActivityReport a;
  a.cycles = 1000;
  a.toggles = 12345;
  a.toggles_per_cycle_mean = 12.345;
  const auto pts = power_sweep(a, kSweepFrequenciesMhz);
  ASSERT_EQ(pts.size(), kSweepFrequenciesMhz.size());
  EXPECT_DOUBLE_EQ(pts[1].power / pts[0].power, kSweepFrequenciesMhz[1] / kSweepFrequenciesMhz[0]);
  EXPECT_NEAR(linear_r2(pts), 1.0, 1e-12);
  EXPECT_EQ(power_table(a, pts).rows.size(), pts.size());
}

TEST(Power, R2DetectsNonLinearity) {
  const std::vector<PowerPoint> pts{{1, 1}, {2, 4}, {3, 9}, {4, 16}, {5, 25}};
  const double r2 = linear_r2(pts);
  EXPECT_LT(r2, 0.99);
  EXPECT_GT(r2, 0.9);
}

TEST(Svg, WellFormedAndEscaped) {
  std::vector<EvalReport> sweep(3);
  sweep[0].signal_efficiency = 0.0;
  sweep[0].background_rejection = 1.0;
  sweep[1].signal_efficiency = 0.5;
  sweep[1].background_rejection = 0.9;
  sweep[2].signal_efficiency = 1.0;
  sweep[2].background_rejection = 0.0;
  const std::string s = roc_svg(sweep, "a < b & c", 0.9);
  EXPECT_EQ(s.rfind("<svg", 0), 0u);
  EXPECT_NE(s.find("</svg>"), std::string::npos);
  EXPECT_NE(s.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_NE(s.find("<polyline"), std::string::npos);
  EXPECT_NE(s.find("AUC = 0.9000"), std::string::npos);
  // Every opened element is closed.
  const std::regex open("<(svg|text)[ >]");
  const std::regex close("</(svg|text)>");
  const auto count = [&](const std::regex& r) {
    return std::distance(std::sregex_iterator(s.begin(), s.end(), r), std::sregex_iterator());
  };
  EXPECT_EQ(count(open), count(close));
}

TEST(Fit, TableMarksFit) {
  FitReport r;
  r.luts = 224;
  r.capacity.logic_cells = 448;
  r.lut_utilization = 0.5;
  r.fits = true;
  const std::string s = render_csv(fit_table(r));
  EXPECT_NE(s.find("lut4,224,448,50.00"), std::string::npos);
  EXPECT_NE(s.find("fits,yes"), std::string::npos);
}
