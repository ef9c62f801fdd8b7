// SPDX-License-Identifier: Apache-2.0
#include "efab/reports.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace efab {
namespace {

bool numeric(const std::string& s) {
  if (s.empty()) {
    return false;
  }
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  return r.ec == std::errc{} && r.ptr == s.data() + s.size();
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string render_text(const Table& t) {
  std::vector<std::size_t> width(t.header.size());
  auto widen = [&](const Row& r) {
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) {
      width[i] = std::max(width[i], r[i].size());
    }
  };
  widen(t.header);
  for (const Row& r : t.rows) {
    widen(r);
  }
  std::string out;
  auto line = [&](const Row& r, bool head) {
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string cell = i < r.size() ? r[i] : std::string{};
      const std::string pad(width[i] - cell.size(), ' ');
      if (i > 0) {
        out += "  ";
      }
      const bool right = !head && i > 0 && numeric(cell);
      out += right ? pad + cell : cell + (i + 1 < width.size() ? pad : std::string{});
    }
    out += '\n';
  };
  line(t.header, true);
  std::size_t total = 0;
  for (std::size_t w : width) {
    total += w;
  }
  out += std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') + '\n';
  for (const Row& r : t.rows) {
    line(r, false);
  }
  return out;
}

std::string render_csv(const Table& t) {
  std::string out;
  auto line = [&](const Row& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i > 0) {
        out += ',';
      }
      const std::string& c = r[i];
      if (c.find_first_of(",\"\n") == std::string::npos) {
        out += c;
        continue;
      }
      out += '"';
      for (char ch : c) {
        if (ch == '"') {
          out += '"';
        }
        out += ch;
      }
      out += '"';
    }
    out += '\n';
  };
  line(t.header);
  for (const Row& r : t.rows) {
    line(r);
  }
  return out;
}

Table census_table(const ResourceCensus& c) {
  return {{"resource", "count"},
          {{"logic_cells", std::to_string(c.logic_cells)},
           {"flip_flops", std::to_string(c.flip_flops)},
           {"registers", std::to_string(c.registers)},
           {"dsp_slices", std::to_string(c.dsp_slices)},
           {"io_input_bits", std::to_string(c.io_input_bits)},
           {"io_output_bits", std::to_string(c.io_output_bits)}}};
}

std::vector<PowerPoint> power_sweep(const ActivityReport& activity, std::span<const double> frequencies_mhz) {
  std::vector<PowerPoint> out;
  for (double f : frequencies_mhz) {
    out.push_back({f, activity.power_proxy(f * 1e6)});
  }
  return out;
}

double linear_r2(std::span<const PowerPoint> pts) {
  const auto n = static_cast<double>(pts.size());
  if (pts.size() < 2) {
    return 1.0;
  }
  double mx = 0.0;
  double my = 0.0;
  for (const PowerPoint& p : pts) {
    mx += p.frequency_mhz;
    my += p.power;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const PowerPoint& p : pts) {
    sxx += (p.frequency_mhz - mx) * (p.frequency_mhz - mx);
    sxy += (p.frequency_mhz - mx) * (p.power - my);
    syy += (p.power - my) * (p.power - my);
  }
  if (syy == 0.0) {
    return 1.0;  // a flat line is fitted exactly
  }
  return sxy * sxy / (sxx * syy);
}

Table power_table(const ActivityReport& activity, std::span<const PowerPoint> points) {
  Table t{{"frequency_mhz", "toggles_per_cycle", "power_proxy_mtoggles_per_s"}, {}};
  for (const PowerPoint& p : points) {
    t.rows.push_back({fmt(p.frequency_mhz), fmt(activity.toggles_per_cycle_mean, 4), fmt(p.power / 1e6, 4)});
  }
  return t;
}

Table ber_table(const BerReport& r) {
  return {{"metric", "value"},
          {{"frames_sent", std::to_string(r.frames_sent)},
           {"frames_received", std::to_string(r.frames_received)},
           {"crc_errors", std::to_string(r.crc_errors)},
           {"payload_mismatches", std::to_string(r.payload_mismatches)},
           {"bit_errors", std::to_string(r.bit_errors)},
           {"octets_received", std::to_string(r.octets_received)},
           {"bit_error_rate", fmt(r.bit_error_rate())},
           {"cycles", std::to_string(r.cycles)},
           {"stall_cycles", std::to_string(r.stall_cycles)},
           {"faults_injected", std::to_string(r.faults_injected)}}};
}

Table eval_table(std::span<const EvalReport> reports) {
  Table t{{"threshold", "signal_efficiency", "background_rejection", "n_signal", "n_background"}, {}};
  for (const EvalReport& r : reports) {
    t.rows.push_back({fmt(r.threshold, 4), fmt(r.signal_efficiency, 6), fmt(r.background_rejection, 6),
                      std::to_string(r.n_signal), std::to_string(r.n_background)});
  }
  return t;
}

Table fit_table(const FitReport& r) {
  auto row = [](const char* name, int used, int cap, double u) {
    return Row{name, std::to_string(used), std::to_string(cap), fmt(100.0 * u, 2)};
  };
  Table t{{"resource", "used", "available", "utilization_pct"},
          {row("lut4", r.luts, r.capacity.logic_cells, r.lut_utilization),
           row("flip_flops", r.ffs, r.capacity.flip_flops, r.ff_utilization),
           row("io_in_bits", r.input_bits, r.capacity.io_input_bits, r.io_in_utilization),
           row("io_out_bits", r.output_bits, r.capacity.io_output_bits, r.io_out_utilization)}};
  t.rows.push_back({"fits", yes_no(r.fits), "", ""});
  return t;
}

Table equivalence_table(const EquivalenceReport& r) {
  Table t{{"metric", "value"},
          {{"vectors", std::to_string(r.vectors)},
           {"mismatches", std::to_string(r.mismatches)},
           {"netlist_mismatches", std::to_string(r.netlist_mismatches)},
           {"fabric_checked", yes_no(r.fabric_checked)},
           {"fabric_mismatches", std::to_string(r.fabric_mismatches)}}};
  if (r.first_index) {
    t.rows.push_back({"first_mismatch", std::to_string(*r.first_index)});
    t.rows.push_back({"expected_score_raw", std::to_string(r.expected_score.raw)});
    t.rows.push_back({"observed_score_raw", std::to_string(r.observed_score.raw)});
  }
  return t;
}

Table compile_table(const CompiledTree& c) {
  return {{"metric", "value"},
          {{"comparators", std::to_string(c.comparators)},
           {"lut4", std::to_string(c.lut_count)},
           {"flip_flops", std::to_string(c.ff_count)},
           {"logic_levels", std::to_string(c.logic_levels)},
           {"pipeline_depth", std::to_string(c.pipeline_depth)},
           {"latency_ns_at_200mhz", fmt(c.latency_ns(), 1)},
           {"feature_width", std::to_string(c.feature_width)},
           {"score_threshold_raw", std::to_string(c.score_threshold.raw)}}};
}

std::string roc_svg(std::span<const EvalReport> sweep, const std::string& title, double auc) {
  constexpr double kW = 480;
  constexpr double kH = 480;
  constexpr double kPad = 60;
  const double plot = kW - 2 * kPad;
  auto px = [&](double x) { return fmt(kPad + x * plot, 2); };
  auto py = [&](double y) { return fmt(kH - kPad - y * plot, 2); };
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kW) + "\" height=\"" + fmt(kH) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt(kW / 2) + "\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
       escape_xml(title) + "</text>\n";
  s += "<rect x=\"" + px(0) + "\" y=\"" + py(1) + "\" width=\"" + fmt(plot) + "\" height=\"" + fmt(plot) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 10; k += 2) {
    const double v = k / 10.0;
    s += "<text x=\"" + px(v) + "\" y=\"" + fmt(kH - kPad + 18) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(v, 1) + "</text>\n";
    s += "<text x=\"" + fmt(kPad - 8) + "\" y=\"" + py(v) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(v, 1) + "</text>\n";
  }
  s += "<text x=\"" + fmt(kW / 2) + "\" y=\"" + fmt(kH - 15) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">signal efficiency</text>\n";
  s += "<text x=\"18\" y=\"" + fmt(kH / 2) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
       "transform=\"rotate(-90 18 " + fmt(kH / 2) + ")\">background rejection</text>\n";
  s += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (const EvalReport& r : sweep) {
    s += px(r.signal_efficiency) + "," + py(r.background_rejection) + " ";
  }
  s += "\"/>\n";
  s += "<text x=\"" + px(0.05) + "\" y=\"" + py(0.05) + "\" font-family=\"sans-serif\" font-size=\"12\">AUC = " +
       fmt(auc, 4) + "</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace efab
