// SPDX-License-Identifier: Apache-2.0
//
// efab: census, counter/loopback experiments, classifier train/compile/classify flows.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "efab/bitstream.hpp"
#include "efab/cad_flow.hpp"
#include "efab/designs.hpp"
#include "efab/fabric_model.hpp"
#include "efab/fabric_sim.hpp"
#include "efab/pixel.hpp"
#include "efab/reports.hpp"
#include "efab/stream_link.hpp"
#include "efab/tree_compiler.hpp"
#include "efab/tree_model.hpp"

namespace fs = std::filesystem;
using namespace efab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

enum class Level { Quiet, Info, Debug };

Level log_level() {
  const char* v = std::getenv("EFAB_LOG");
  if (!v) {
    return Level::Info;
  }
  const std::string s(v);
  if (s == "quiet" || s == "error" || s == "0") {
    return Level::Quiet;
  }
  return s == "debug" || s == "2" ? Level::Debug : Level::Info;
}

void log(Level at, const std::string& msg) {
  static const Level current = log_level();
  if (at <= current) {
    std::cerr << "efab: " << msg << '\n';
  }
}

struct Failure {
  int exit_code;
  std::string message;
};

// Errors from reading user inputs are usage errors; anything later is a flow failure.
template <class F>
auto input_stage(const std::string& what, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Failure{kExitUsage, what + ": " + e.what()};
  } catch (const std::exception& e) {
    throw Failure{kExitUsage, what + ": " + e.what()};
  }
}

template <class F>
auto flow_stage(const std::string& stage, F&& fn) {
  log(Level::Debug, "stage " + stage);
  try {
    return fn();
  } catch (const Error& e) {
    throw Failure{kExitFail, "stage " + stage + " failed: " + e.what()};
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::IoError, "cannot open '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Output {
 public:
  explicit Output(std::string dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) {
      input_stage("output directory", [&] { return fs::create_directories(dir_); });
    }
  }
  void write(const std::string& name, const std::string& text) const {
    if (dir_.empty()) {
      return;
    }
    const fs::path p = fs::path(dir_) / name;
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) {
      throw Failure{kExitUsage, "cannot write '" + p.string() + "'"};
    }
    log(Level::Debug, "wrote " + p.string());
  }

 private:
  std::string dir_;
};

void print(const std::string& title, const Table& t) { std::cout << "== " << title << '\n' << render_text(t) << '\n'; }

FabricLayout layout_arg(const std::string& name) {
  return input_stage("layout", [&] { return load_layout(name); });
}

// census ---------------------------------------------------------------------

int cmd_census(const std::string& layout_name, const std::string& out_dir) {
  const FabricLayout layout = layout_arg(layout_name);
  const Table t = census_table(census(layout));
  print("census " + layout_name, t);
  Output(out_dir).write("census.csv", render_csv(t));
  return kExitOk;
}

// counter-test ---------------------------------------------------------------

struct CounterArgs {
  std::string layout = "cmos28";
  std::uint64_t cycles = 100000;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> corrupt_bit;
  std::string out;
};

int cmd_counter(const CounterArgs& a) {
  constexpr int kWidth = 16;
  const FabricLayout layout = layout_arg(a.layout);
  const Netlist nl = counter_design(kWidth);
  FlowOptions fo;
  fo.place.seed = a.seed;
  fo.place.pins = counter_pins(kWidth);
  FlowResult flow = flow_stage("place-route", [&] { return run_flow(nl, layout, fo); });
  std::cout << "counter: " << flow.luts_used << " LUTs, " << flow.routing.wire_segments() << " wire segments\n";
  if (a.corrupt_bit) {
    const std::uint64_t bit = *a.corrupt_bit % (8 * flow.image.size());
    flow.image[bit / 8] ^= static_cast<std::uint8_t>(1U << (bit % 8));
    log(Level::Info, "flipped image bit " + std::to_string(bit));
  }
  FabricState fab = flow_stage("load", [&] { return FabricState::load(layout, flow.image); });
  if (a.cycles == 0) {
    std::cout << "warning: 0 cycles requested; nothing to check (vacuous pass)\n";
    return kExitOk;
  }
  IoFrame in = make_io_frame(layout);
  std::uint64_t mismatches = 0;
  std::optional<std::uint64_t> first;
  for (std::uint64_t k = 0; k < a.cycles; ++k) {
    const IoFrame o = fab.step(in);
    std::uint32_t v = 0;
    for (int b = 0; b < kWidth; ++b) {
      v |= static_cast<std::uint32_t>(o.west_out[static_cast<std::size_t>(b)] & 1U) << b;
    }
    if (v != (k & 0xFFFFu)) {
      mismatches += 1;
      if (!first) {
        first = k;
      }
    }
  }
  const ActivityReport act = activity_report(fab);
  const auto sweep = power_sweep(act);
  const Table pt = power_table(act, sweep);
  std::cout << "cycles " << a.cycles << ", mismatches " << mismatches << '\n';
  if (first) {
    std::cout << "first mismatch at cycle " << *first << '\n';
  }
  print("activity (model, not measurement)", pt);
  std::cout << "power/frequency fit R^2 = " << fmt(linear_r2(sweep), 12) << "\n\n";
  const Output out(a.out);
  out.write("activity.csv", render_csv(pt));
  out.write("counter.txt", "cycles," + std::to_string(a.cycles) + "\nmismatches," + std::to_string(mismatches) + "\n");
  std::cout << (mismatches == 0 ? "PASS" : "FAIL") << " counter-test\n";
  return mismatches == 0 ? kExitOk : kExitFail;
}

// loopback-test --------------------------------------------------------------

struct LoopbackArgs {
  std::string layout = "cmos28";
  std::uint64_t frames = 1000;
  std::size_t frame_len = 256;
  std::uint64_t seed = 1;
  double ready = 0.7;
  std::string faults;
  std::string out;
};

int cmd_loopback(const LoopbackArgs& a) {
  const FabricLayout layout = layout_arg(a.layout);
  LoopbackOptions lo;
  lo.frames = a.frames;
  lo.frame_len = a.frame_len;
  lo.seed = a.seed;
  lo.ready_probability = a.ready;
  if (!a.faults.empty()) {
    lo.faults = input_stage("fault schedule", [&] { return parse_fault_schedule(read_file(a.faults)); });
  }
  FlowOptions fo;
  fo.place.seed = a.seed;
  fo.place.pins = loopback_pins();
  const FlowResult flow = flow_stage("place-route", [&] { return run_flow(loopback_design(), layout, fo); });
  FabricState fab = flow_stage("load", [&] { return FabricState::load(layout, flow.image); });
  const BerReport r = flow_stage("loopback", [&] { return run_loopback(fab, lo); });
  const Table t = ber_table(r);
  print("loopback", t);
  Output(a.out).write("ber.csv", render_csv(t));
  const bool clean = r.crc_errors == 0 && r.bit_errors == 0 && r.payload_mismatches == 0 &&
                     r.frames_received == r.frames_sent;
  const bool pass = clean && lo.faults.empty();
  std::cout << (pass ? "PASS" : "FAIL") << " loopback-test"
            << (lo.faults.empty() ? "" : " (faults were scheduled)") << '\n';
  return pass ? kExitOk : kExitFail;
}

// gen-data / train -----------------------------------------------------------

int cmd_gen_data(std::size_t n, std::uint64_t seed, const std::string& path) {
  const auto tracks = synth_dataset(n, seed);
  input_stage("dataset output", [&] {
    write_tracks(path, tracks);
    return 0;
  });
  std::cout << "wrote " << n << " tracks to " << path << '\n';
  return kExitOk;
}

struct MlArgs {
  std::string dataset;
  std::size_t synthetic = 0;
  std::string model;
  std::string layout = "cmos28";
  std::uint64_t seed = 1;
  double split = 0.8;
  double threshold = 0.4922;
  int max_splits = 9;
  std::string out;
};

std::vector<Track> load_dataset(const MlArgs& a) {
  if (a.dataset.empty() && a.synthetic > 0) {
    return synth_dataset(a.synthetic, a.seed);
  }
  if (a.dataset.empty()) {
    throw Failure{kExitUsage, "one of --dataset or --synthetic is required"};
  }
  return input_stage("dataset", [&] { return read_tracks(a.dataset); });
}

struct Split {
  LabeledFeatures train;
  LabeledFeatures test;
};

Split split_tracks(const MlArgs& a) {
  const auto tracks = load_dataset(a);
  auto [tr, te] = input_stage("split", [&] { return split_dataset(tracks, a.split, a.seed); });
  return {featurize(tr), featurize(te)};
}

TreeModel obtain_model(const MlArgs& a, const LabeledFeatures& train) {
  if (!a.model.empty()) {
    return input_stage("model", [&] { return import_model(read_file(a.model)); });
  }
  TrainOptions o;
  o.max_splits = a.max_splits;
  return flow_stage("train", [&] { return train_tree(train.x, train.y, o); });
}

int cmd_train(const MlArgs& a, const std::string& model_out) {
  const Split s = split_tracks(a);
  const TreeModel m = obtain_model(a, s.train);
  const auto p = predict_all(m, s.test.x);
  std::cout << "trained tree: " << m.internal_nodes() << " splits, depth " << m.depth() << ", held-out AUC "
            << fmt(roc_auc(p, s.test.y), 4) << '\n';
  std::ofstream out(model_out, std::ios::binary);
  out << export_model(m);
  if (!out) {
    throw Failure{kExitUsage, "cannot write '" + model_out + "'"};
  }
  return kExitOk;
}

// compile / classify ---------------------------------------------------------

int cmd_compile(const MlArgs& a) {
  const FabricLayout layout = layout_arg(a.layout);
  const TreeModel m = input_stage("model", [&] { return import_model(read_file(a.model)); });
  const QuantTreeModel q = flow_stage("quantize", [&] { return quantize(m); });
  CompileOptions co;
  co.score_threshold = flow_stage("threshold", [&] { return score_threshold(a.threshold); });
  const CompiledTree ct = flow_stage("compile", [&] { return compile_tree(q, co); });
  const FitReport fit = estimate_resources(ct, layout);
  print("compile", compile_table(ct));
  print("fit " + a.layout, fit_table(fit));
  const Output out(a.out);
  out.write("tree.netlist", write_netlist(ct.netlist));
  out.write("fit.csv", render_csv(fit_table(fit)));
  if (!fit.fits) {
    std::cout << "FAIL compile (does not fit)\n";
    return kExitFail;
  }
  FlowOptions fo;
  fo.place.seed = a.seed;
  const FlowResult flow = flow_stage("place-route", [&] { return run_flow(ct.netlist, layout, fo); });
  out.write("tree.bit", std::string(flow.image.begin(), flow.image.end()));
  std::cout << "routed in " << flow.routing.iterations << " iterations, " << flow.routing.wire_segments()
            << " wire segments\nPASS compile\n";
  return kExitOk;
}

int cmd_classify(const MlArgs& a) {
  const FabricLayout layout = layout_arg(a.layout);
  const Split s = split_tracks(a);
  const TreeModel m = obtain_model(a, s.train);
  const QuantTreeModel q = flow_stage("quantize", [&] { return quantize(m); });
  CompileOptions co;
  co.score_threshold = flow_stage("threshold", [&] { return score_threshold(a.threshold); });

  const auto p_float = predict_all(m, s.test.x);
  const auto p_quant = predict_all(q, s.test.x);
  std::vector<QuantFeatures> vectors;
  std::vector<double> hw_decision;
  for (const FeatureVector& x : s.test.x) {
    vectors.push_back(quantize_features(x));
    hw_decision.push_back(predict_quantized(q, vectors.back()).score >= co.score_threshold ? 1.0 : 0.0);
  }
  const auto rows = flow_stage("evaluate", [&] {
    return std::vector<std::pair<std::string, EvalReport>>{
        {"float", evaluate_probabilities(p_float, s.test.y, a.threshold)},
        {"quantized", evaluate_probabilities(p_quant, s.test.y, a.threshold)},
        {"hardware_score_space", evaluate_probabilities(hw_decision, s.test.y, 0.5)}};
  });
  Table metrics{{"model", "threshold", "signal_efficiency", "background_rejection", "n_signal", "n_background"}, {}};
  for (const auto& [name, r] : rows) {
    metrics.rows.push_back({name, fmt(a.threshold, 4), fmt(r.signal_efficiency, 6), fmt(r.background_rejection, 6),
                            std::to_string(r.n_signal), std::to_string(r.n_background)});
  }
  const double auc = roc_auc(p_quant, s.test.y);
  const auto sweep = threshold_sweep(p_quant, s.test.y, 101);

  const CompiledTree ct = flow_stage("compile", [&] { return compile_tree(q, co); });
  const FitReport fit = estimate_resources(ct, layout);
  std::optional<FlowResult> flow;
  if (fit.fits) {
    FlowOptions fo;
    fo.place.seed = a.seed;
    flow = flow_stage("place-route", [&] { return run_flow(ct.netlist, layout, fo); });
  }
  const EquivalenceReport eq = flow_stage("fabric-run", [&] {
    return flow ? equivalence_check(ct, q, vectors, {&layout, &*flow}) : equivalence_check(ct, q, vectors);
  });

  std::cout << "model: " << m.internal_nodes() << " splits, depth " << m.depth() << "; test tracks "
            << s.test.y.size() << "; AUC " << fmt(auc, 4) << "\n\n";
  print("metrics", metrics);
  print("compile", compile_table(ct));
  print("fit " + a.layout, fit_table(fit));
  print("equivalence", equivalence_table(eq));

  const Output out(a.out);
  out.write("model.json", export_model(m));
  out.write("metrics.csv", render_csv(metrics));
  out.write("roc.csv", render_csv(eval_table(sweep)));
  out.write("roc.svg", roc_svg(sweep, "quantized tree, held-out tracks", auc));
  out.write("fit.csv", render_csv(fit_table(fit)));
  out.write("equivalence.csv", render_csv(equivalence_table(eq)));

  const bool pass = fit.fits && eq.fabric_checked && eq.passed();
  std::cout << (pass ? "PASS" : "FAIL") << " classify (" << eq.vectors << " vectors, " << eq.mismatches
            << " mismatches)\n";
  return pass ? kExitOk : kExitFail;
}

// format-doc -----------------------------------------------------------------

int cmd_format_doc(const std::string& path) {
  std::ostringstream d;
  d << "# Configuration widths\n\n"
    << "Generated by `efab format-doc`; these are the constants compiled into the library.\n\n"
    << "| tile | config bits | local sources | local sinks | select bits | prefix bits |\n"
    << "|---|---:|---:|---:|---:|---:|\n";
  for (TileKind k : kAllTileKinds) {
    if (!is_configurable(k)) {
      continue;
    }
    d << "| " << tile_name(k) << " | " << config_width(k);
    if (is_routable(k)) {
      const SwitchGeometry g = switch_geometry(k);
      d << " | " << g.local_sources << " | " << g.local_sinks << " | " << g.select_bits << " | " << g.prefix_bits;
    } else {
      d << " | - | - | - | -";
    }
    d << " |\n";
  }
  d << "\nChannel width: " << kChannelWidth << " tracks per side per direction. "
    << "LUT slot: " << kLutSlotBits << " bits (16-bit truth table + registered flag), "
    << kSlotsPerLogicTile << " slots per LUT4AB. IO: " << kIoBitsPerTile << " bits per IO tile.\n";
  if (path.empty()) {
    std::cout << d.str();
    return kExitOk;
  }
  std::ofstream out(path, std::ios::binary);
  out << d.str();
  if (!out) {
    throw Failure{kExitUsage, "cannot write '" + path + "'"};
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"efab: embedded FPGA fabric toolkit"};
  app.require_subcommand(1);

  std::string layout = "cmos28";
  std::string out;

  auto* census_cmd = app.add_subcommand("census", "Print the resource census of a layout");
  census_cmd->add_option("--layout", layout, "Builtin layout name or layout file")->capture_default_str();
  census_cmd->add_option("--out", out, "Directory for report files");

  CounterArgs ca;
  auto* counter_cmd = app.add_subcommand("counter-test", "Run the 16-bit counter through the full flow");
  counter_cmd->add_option("--layout", ca.layout)->capture_default_str();
  counter_cmd->add_option("--cycles", ca.cycles)->capture_default_str();
  counter_cmd->add_option("--seed", ca.seed)->capture_default_str();
  counter_cmd->add_option("--corrupt-bit", ca.corrupt_bit, "Flip this configuration image bit before loading");
  counter_cmd->add_option("--out", ca.out);

  LoopbackArgs la;
  auto* loop_cmd = app.add_subcommand("loopback-test", "PRBS frames through the link and fabric loopback");
  loop_cmd->add_option("--layout", la.layout)->capture_default_str();
  loop_cmd->add_option("--frames", la.frames)->capture_default_str();
  loop_cmd->add_option("--frame-len", la.frame_len)->capture_default_str();
  loop_cmd->add_option("--seed", la.seed)->capture_default_str();
  loop_cmd->add_option("--ready", la.ready, "Probability that the egress accepts a word")->capture_default_str();
  loop_cmd->add_option("--faults", la.faults, "Fault schedule file: 'frame bit' per line");
  loop_cmd->add_option("--out", la.out);

  std::size_t gen_n = 10000;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic track file");
  gen_cmd->add_option("--tracks", gen_n)->capture_default_str();
  gen_cmd->add_option("--seed", gen_seed)->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Track file (.gz for gzip)")->required();

  MlArgs ma;
  std::string model_out;
  auto add_ml = [&](CLI::App* c) {
    c->add_option("--dataset", ma.dataset, "Track file (plain or gzip)");
    c->add_option("--synthetic", ma.synthetic, "Generate this many synthetic tracks instead");
    c->add_option("--seed", ma.seed)->capture_default_str();
    c->add_option("--split", ma.split, "Training fraction")->capture_default_str();
    c->add_option("--max-splits", ma.max_splits, "Tree size limit (0 = unlimited)")->capture_default_str();
  };
  auto* train_cmd = app.add_subcommand("train", "Train a tree and export it as JSON");
  add_ml(train_cmd);
  train_cmd->add_option("--model", model_out, "Output model file")->required();

  auto* compile_cmd = app.add_subcommand("compile", "Compile a model to a netlist and configuration image");
  compile_cmd->add_option("--model", ma.model, "Model JSON")->required();
  compile_cmd->add_option("--layout", ma.layout)->capture_default_str();
  compile_cmd->add_option("--threshold", ma.threshold, "Decision threshold (probability)")->capture_default_str();
  compile_cmd->add_option("--seed", ma.seed)->capture_default_str();
  compile_cmd->add_option("--out", ma.out);

  auto* classify_cmd = app.add_subcommand("classify", "Train or import, compile, run on the fabric, evaluate");
  add_ml(classify_cmd);
  classify_cmd->add_option("--model", ma.model, "Import this model instead of training");
  classify_cmd->add_option("--layout", ma.layout)->capture_default_str();
  classify_cmd->add_option("--threshold", ma.threshold, "Decision threshold (probability)")->capture_default_str();
  classify_cmd->add_option("--out", ma.out);

  std::string doc_out;
  auto* doc_cmd = app.add_subcommand("format-doc", "Emit the configuration width table");
  doc_cmd->add_option("--out", doc_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*census_cmd) {
      return cmd_census(layout, out);
    }
    if (*counter_cmd) {
      return cmd_counter(ca);
    }
    if (*loop_cmd) {
      return cmd_loopback(la);
    }
    if (*gen_cmd) {
      return cmd_gen_data(gen_n, gen_seed, gen_out);
    }
    if (*train_cmd) {
      return cmd_train(ma, model_out);
    }
    if (*compile_cmd) {
      return cmd_compile(ma);
    }
    if (*classify_cmd) {
      return cmd_classify(ma);
    }
    if (*doc_cmd) {
      return cmd_format_doc(doc_out);
    }
  } catch (const Failure& f) {
    std::cerr << "efab: " << f.message << '\n';
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "efab: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitUsage;
}
