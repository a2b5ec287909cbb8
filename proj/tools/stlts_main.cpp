// stlts - STL trace synthesizer.
//
// Subcommands: synth, check, mine, monitor, encode. Exit codes: 0 on
// success/holds, 1 on no-trace/counterexample, 2 on timeout, 3 on errors.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "stlts/driver.hpp"
#include "stlts/stl_encoder.hpp"

using namespace stlts;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct CommonOpts {
  std::string spec_path, model_path, bench;
  double horizon = -1; // default from model file
  int n = 0, n_max = 0;
  double delta = 0.1, epsilon = 1e-4;
  int beta = 8;
  std::string solver;
  double time_limit = 600;
  std::string out_path, dump_lp, plot_path;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_model) {
  cmd->add_option("--spec", o.spec_path, "spec file (.stl)");
  if (with_model) cmd->add_option("--model", o.model_path, "model file (.json)");
  cmd->add_option("--bench", o.bench, "benchmark name (rnc1..rnc3, nav1, nav2, toy)");
  cmd->add_option("-T,--horizon", o.horizon, "time horizon");
  cmd->add_option("-N", o.n, "variability bound");
  cmd->add_option("--n-max", o.n_max, "sweep bound upper limit");
  cmd->add_option("--delta", o.delta, "tightening constant (default 0.1)");
  cmd->add_option("--epsilon", o.epsilon, "strictness slack (default 1e-4)");
  cmd->add_option("--beta", o.beta, "binary-expansion bits (default 8)");
  cmd->add_option("--solver", o.solver, "solver adapter executable");
  cmd->add_option("--time-limit", o.time_limit, "total budget in seconds");
  cmd->add_option("--out", o.out_path, "output trace file (.csv or .json)");
  cmd->add_option("--dump-encoding", o.dump_lp, "write the MILP as an LP file");
  cmd->add_option("--plot", o.plot_path, "write a gnuplot script for the trace");
}

void resolve_bench(CommonOpts& o) {
  if (o.bench.empty()) return;
  std::string dir = std::string(STLTS_SOURCE_DIR) + "/benchmarks/";
  if (o.bench == "rnc1" || o.bench == "rnc2" || o.bench == "rnc3") {
    o.spec_path = dir + o.bench + ".stl";
    o.model_path = dir + "rnc.json";
  } else if (o.bench == "nav1" || o.bench == "nav2") {
    o.spec_path = dir + o.bench + ".stl";
    o.model_path = dir + "nav.json";
  } else if (o.bench == "toy") {
    o.spec_path = dir + "toy_p.stl";
    o.model_path = dir + "toy.json";
  } else {
    throw std::runtime_error("unknown benchmark '" + o.bench + "'");
  }
}

DriverConfig make_config(const CommonOpts& o) {
  DriverConfig c;
  c.delta = o.delta;
  c.epsilon = o.epsilon;
  c.beta = o.beta;
  c.solver.adapter = o.solver;
  c.solver.time_limit = o.time_limit;
  c.dump_lp = o.dump_lp;
  if (!o.dump_lp.empty()) c.dump_symbols = o.dump_lp + ".symbols.json";
  if (o.epsilon >= o.delta / 10.0)
    std::cerr << "warning: epsilon should be well below delta (epsilon="
              << o.epsilon << ", delta=" << o.delta << ")\n";
  return c;
}

void write_plot(const std::string& plot_path, const std::string& csv_path,
                const PwlTrace& trace) {
  std::ofstream f(plot_path);
  f << "set xlabel 'time'\nset key outside\nset datafile separator ','\n";
  f << "plot ";
  int col = 2;
  for (const auto& v : trace.variables()) {
    if (col > 2) f << ", \\\n     ";
    f << "'" << csv_path << "' using 1:" << col << " with linespoints title '" << v
      << "'";
    ++col;
  }
  f << "\n";
}

void emit_trace(const CommonOpts& o, const PwlTrace& trace) {
  std::string out = o.out_path.empty() ? "trace.csv" : o.out_path;
  save_trace_file(trace, out);
  std::cout << "trace written to " << out << "\n";
  if (!o.plot_path.empty()) {
    write_plot(o.plot_path, out, trace);
    std::cout << "plot script written to " << o.plot_path << "\n";
  }
}

double pick_horizon(const CommonOpts& o, const SystemModel& m) {
  if (o.horizon > 0) return o.horizon;
  if (m.horizon > 0) return m.horizon;
  throw std::runtime_error("no horizon: give -T or set it in the model file");
}

int run_synth(CommonOpts& o) {
  resolve_bench(o);
  ParsedSpec spec = parse_spec(slurp(o.spec_path));
  if (spec.is_parametric())
    throw std::runtime_error("spec has free parameters; use 'mine'");
  SystemModel model = load_model_file(o.model_path);
  double T = pick_horizon(o, model);
  int n_max = o.n_max > 0 ? o.n_max : (o.n > 0 ? o.n : 6);
  int n_min = o.n > 0 && o.n_max == 0 ? o.n : 1;

  SynthesisOutcome res =
      synthesize(spec.formula, model, T, n_min, n_max, make_config(o));
  for (const auto& s : res.stats)
    std::cout << "  N=" << s.n << ": " << s.status << " (" << s.seconds << " s)\n";
  switch (res.status) {
    case SynthesisOutcome::Status::Trace:
      std::cout << "TRACE found at N=" << res.n_used
                << " (monitor: sat=" << (res.validation.sat_ok ? "yes" : "NO")
                << ", robustness=" << res.validation.robustness << ")\n";
      emit_trace(o, *res.trace);
      return 0;
    case SynthesisOutcome::Status::NoTraceUpToN:
      std::cout << "NO TRACE up to N=" << n_max
                << " (no satisfying trace with this variability bound, up to "
                   "delta-robust satisfaction)\n";
      return 1;
    case SynthesisOutcome::Status::Timeout:
      std::cout << "TIMEOUT\n";
      return 2;
    case SynthesisOutcome::Status::Error:
      std::cerr << "error: " << res.message << "\n";
      return 3;
  }
  return 3;
}

int run_check(CommonOpts& o) {
  resolve_bench(o);
  ParsedSpec spec = parse_spec(slurp(o.spec_path));
  if (spec.is_parametric())
    throw std::runtime_error("spec has free parameters; use 'mine'");
  SystemModel model = load_model_file(o.model_path);
  double T = pick_horizon(o, model);
  int n = o.n > 0 ? o.n : 4;

  CheckOutcome res = model_check(spec.formula, model, T, n, make_config(o));
  switch (res.status) {
    case CheckOutcome::Status::Holds:
      std::cout << "HOLDS (up to N=" << n
                << "-bounded variability and delta-robust violations)\n";
      return 0;
    case CheckOutcome::Status::Counterexample:
      std::cout << "COUNTEREXAMPLE at N=" << res.dual.n_used << "\n";
      if (res.dual.trace) emit_trace(o, *res.dual.trace);
      return 1;
    case CheckOutcome::Status::Timeout:
      std::cout << "TIMEOUT\n";
      return 2;
    case CheckOutcome::Status::Error:
      std::cerr << "error: " << res.message << "\n";
      return 3;
  }
  return 3;
}

int run_mine(CommonOpts& o) {
  resolve_bench(o);
  ParsedSpec spec = parse_spec(slurp(o.spec_path));
  SystemModel model = load_model_file(o.model_path);
  double T = pick_horizon(o, model);
  int n = o.n > 0 ? o.n : 4;

  MiningOutcome res = mine_parameter(spec, model, T, n, make_config(o));
  switch (res.status) {
    case MiningOutcome::Status::Optimum:
      std::cout << "p* = " << res.best_value << " (N=" << res.n_used << ")\n";
      if (res.witness) emit_trace(o, *res.witness);
      return 0;
    case MiningOutcome::Status::Infeasible:
      std::cout << "INFEASIBLE for every parameter value in the domain\n";
      return 1;
    case MiningOutcome::Status::Timeout:
      if (res.witness) {
        std::cout << "TIMEOUT, best so far p = " << res.best_value << "\n";
        emit_trace(o, *res.witness);
      } else {
        std::cout << "TIMEOUT\n";
      }
      return 2;
    case MiningOutcome::Status::Error:
      std::cerr << "error: " << res.message << "\n";
      return 3;
  }
  return 3;
}

int run_monitor(const std::string& trace_path, const std::string& spec_path,
                bool robust, double at, bool intervals) {
  PwlTrace trace = load_trace_file(trace_path);
  ParsedSpec spec = parse_spec(slurp(spec_path));
  if (spec.is_parametric())
    throw std::runtime_error("monitoring needs a parameter-free spec");
  TruthIntervalSet set = truth_intervals(trace, spec.formula);
  bool ok = set.contains(at);
  std::cout << (ok ? "SAT" : "UNSAT") << "\n";
  if (robust)
    std::cout << "robustness " << robustness_signal(trace, spec.formula).eval(at)
              << "\n";
  if (intervals) std::cout << set.to_json() << "\n";
  return ok ? 0 : 1;
}

int run_encode(CommonOpts& o) {
  resolve_bench(o);
  ParsedSpec spec = parse_spec(slurp(o.spec_path));
  SystemModel model = load_model_file(o.model_path);
  double T = pick_horizon(o, model);
  int n = o.n > 0 ? o.n : 4;
  std::string out = o.dump_lp.empty() ? "encoding.lp" : o.dump_lp;

  EncodingParams p;
  p.n_intervals = n;
  p.horizon = T;
  p.delta = o.delta;
  p.epsilon = o.epsilon;
  FormulaPtr phi = prepare_formula(spec.formula);
  EncodingContext ctx(phi, p);
  ctx.encode_time_sequence();
  ModelEncoder::encode(model, ctx, o.beta);
  if (spec.magnitude_domains.size() == 1) {
    const auto& [pname, pdom] = *spec.magnitude_domains.begin();
    ctx.register_param(pname, pdom.lo, pdom.hi);
  }
  StlEncoder::encode_formula(ctx);
  {
    std::ofstream f(out);
    f << ctx.model().lower_conditionals().write_lp();
  }
  {
    std::ofstream f(out + ".symbols.json");
    f << ctx.symbol_map_json();
  }
  std::cout << "encoding written to " << out << " (+ .symbols.json)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stlts - optimization-based STL trace synthesis and model checking"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string trace_path;
  bool robust = false, intervals = false;
  double at = 0.0;

  CLI::App* synth = app.add_subcommand("synth", "synthesize a satisfying trace");
  add_common(synth, o, true);
  CLI::App* check = app.add_subcommand("check", "bounded model checking");
  add_common(check, o, true);
  CLI::App* mine = app.add_subcommand("mine", "maximize a magnitude parameter");
  add_common(mine, o, true);
  CLI::App* enc = app.add_subcommand("encode", "dump the MILP encoding");
  add_common(enc, o, true);

  CLI::App* mon = app.add_subcommand("monitor", "evaluate a spec on a trace");
  mon->add_option("--trace", trace_path, "trace file (.csv or .json)")->required();
  mon->add_option("--spec", o.spec_path, "spec file")->required();
  mon->add_flag("--robust", robust, "also print the robustness value");
  mon->add_flag("--intervals", intervals, "print the truth intervals as JSON");
  mon->add_option("--at", at, "evaluation time (default 0)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(o);
    if (check->parsed()) return run_check(o);
    if (mine->parsed()) return run_mine(o);
    if (enc->parsed()) return run_encode(o);
    if (mon->parsed()) return run_monitor(trace_path, o.spec_path, robust, at, intervals);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 3;
}
