#include "stlts/driver.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "stlts/stl_encoder.hpp"

namespace stlts {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

EncodingContext build_encoding(const FormulaPtr& phi, const SystemModel& model,
                               double horizon, int n, const DriverConfig& config,
                               const std::string* param_name,
                               const ParamDomain* param_dom) {
  EncodingParams p;
  p.n_intervals = n;
  p.horizon = horizon;
  p.delta = config.delta;
  p.epsilon = config.epsilon;
  EncodingContext ctx(phi, p);
  ctx.encode_time_sequence();
  ModelEncoder::encode(model, ctx, config.beta);
  if (param_name) ctx.register_param(*param_name, param_dom->lo, param_dom->hi);
  StlEncoder::encode_formula(ctx);
  if (param_name) {
    ctx.model().set_objective(ObjectiveSense::Maximize,
                              {{ctx.param_var(*param_name), 1.0}});
  } else if (config.maximize_margins) {
    // heuristic anytime objective: push atomic margins up
    std::vector<std::pair<VarId, double>> terms;
    for (const auto& sub : ctx.subformulas()) {
      if (sub->kind != NodeKind::Atom) continue;
      for (int i = 0; i <= ctx.n(); ++i)
        for (const auto& [v, c] : sub->pred.coeffs)
          terms.push_back({ctx.trace_var(v, i), c / (ctx.n() + 1.0)});
    }
    if (!terms.empty()) ctx.model().set_objective(ObjectiveSense::Maximize, terms);
  }
  return ctx;
}

void dump_encoding(const EncodingContext& ctx, const DriverConfig& config) {
  if (!config.dump_lp.empty()) {
    std::ofstream f(config.dump_lp);
    f << ctx.model().lower_conditionals().write_lp();
  }
  if (!config.dump_symbols.empty()) {
    std::ofstream f(config.dump_symbols);
    f << ctx.symbol_map_json();
  }
}

struct Decoded {
  PwlTrace trace;
  std::vector<double> gamma;
  Valuation theta;
};

Decoded decode_trace(const EncodingContext& ctx,
                     const std::map<std::string, double>& assignment) {
  int n = ctx.n();
  Decoded out;
  for (int i = 0; i <= n; ++i)
    out.gamma.push_back(assignment.at("g_" + std::to_string(i)));

  TimedStateSequence seq;
  for (int i = 0; i <= n; ++i) {
    seq.times.push_back(out.gamma[i]);
    State st;
    for (const auto& v : ctx.trace_var_names())
      st[v] = assignment.at("x_" + std::to_string(i) + "_" + v);
    seq.states.push_back(std::move(st));
  }
  // knot times come out of the solver; enforce exact endpoints
  seq.times.front() = 0.0;
  out.trace = PwlTrace(std::move(seq));

  const auto& subs = ctx.subformulas();
  for (size_t k = 0; k < subs.size(); ++k) {
    std::string key = pretty_print(subs[k]);
    for (int i = 1; i <= n; ++i) {
      double v = assignment.at("val_" + std::to_string(k) + "_" + std::to_string(i));
      out.theta[{key, i}] = v > 0.5;
    }
  }
  return out;
}

ValidationReport validate(const PwlTrace& trace, const FormulaPtr& phi,
                          const std::vector<double>& gamma, const Valuation& theta,
                          double delta) {
  ValidationReport rep;
  rep.checked = true;
  rep.sat_ok = sat(trace, phi);
  rep.robustness = robustness(trace, phi);
  std::string why;
  rep.conservative_ok =
      check_conservative_valuation(trace, phi, gamma, theta, delta, &why);
  if (!rep.sat_ok) rep.detail = "monitor rejects the trace";
  else if (!rep.conservative_ok) rep.detail = why;
  return rep;
}

}  // namespace

FormulaPtr prepare_formula(const FormulaPtr& raw) {
  validate_windows(raw);
  FormulaPtr f = rewrite_bounded_ur(to_nnf(raw));
  validate_windows(f);
  return f;
}

SynthesisOutcome synthesize(const FormulaPtr& phi_raw, const SystemModel& model,
                            double horizon, int n_min, int n_max,
                            const DriverConfig& config) {
  SynthesisOutcome out;
  FormulaPtr phi;
  try {
    phi = prepare_formula(phi_raw);
  } catch (const std::exception& e) {
    out.message = e.what();
    return out;
  }

  double budget = config.solver.time_limit;
  double t_start = now_seconds();
  bool timed_out = false;

  for (int n = n_min; n <= n_max; ++n) {
    double elapsed = now_seconds() - t_start;
    double remaining = budget - elapsed;
    if (remaining <= 0) {
      timed_out = true;
      break;
    }
    // cheap failures first: spread the remaining budget over the
    // remaining bounds
    double slice = remaining / (n_max - n + 1);

    double t0 = now_seconds();
    std::string status_str;
    try {
      EncodingContext ctx =
          build_encoding(phi, model, horizon, n, config, nullptr, nullptr);
      dump_encoding(ctx, config);
      SolverConfig sc = config.solver;
      sc.time_limit = slice;
      SolveResult res = ctx.model().solve(sc);
      status_str = res.message.empty() ? "" : res.message;
      switch (res.status) {
        case SolveResult::Status::Optimal:
        case SolveResult::Status::Feasible: {
          auto assignment = ctx.model().bind_solution(res.values);
          Decoded dec = decode_trace(ctx, assignment);
          ValidationReport rep =
              validate(dec.trace, phi, dec.gamma, dec.theta, config.delta);
          out.stats.push_back({n, "feasible", now_seconds() - t0});
          if (!rep.ok())
            throw std::runtime_error(
                "soundness violation: solver trace failed monitor validation (" +
                rep.detail + ")");
          out.status = SynthesisOutcome::Status::Trace;
          out.trace = std::move(dec.trace);
          out.gamma = std::move(dec.gamma);
          out.theta = std::move(dec.theta);
          out.n_used = n;
          out.validation = rep;
          return out;
        }
        case SolveResult::Status::Infeasible:
          out.stats.push_back({n, "infeasible", now_seconds() - t0});
          break;
        case SolveResult::Status::TimeLimit:
          out.stats.push_back({n, "timeout", now_seconds() - t0});
          timed_out = true;
          break;
        case SolveResult::Status::Error:
          out.status = SynthesisOutcome::Status::Error;
          out.message = "solver error at N=" + std::to_string(n) + ": " + res.message;
          out.stats.push_back({n, "error", now_seconds() - t0});
          return out;
      }
    } catch (const std::exception& e) {
      std::string what = e.what();
      if (what.rfind("soundness violation", 0) == 0) throw;  // internal bug
      out.status = SynthesisOutcome::Status::Error;
      out.message = "N=" + std::to_string(n) + ": " + what;
      return out;
    }
  }
  out.status = timed_out ? SynthesisOutcome::Status::Timeout
                         : SynthesisOutcome::Status::NoTraceUpToN;
  return out;
}

CheckOutcome model_check(const FormulaPtr& phi_raw, const SystemModel& model,
                         double horizon, int n, const DriverConfig& config) {
  CheckOutcome out;
  FormulaPtr negated = Formula::negation(phi_raw);
  out.dual = synthesize(negated, model, horizon, 1, n, config);
  switch (out.dual.status) {
    case SynthesisOutcome::Status::Trace:
      out.status = CheckOutcome::Status::Counterexample;
      break;
    case SynthesisOutcome::Status::NoTraceUpToN:
      out.status = CheckOutcome::Status::Holds;
      out.message =
          "holds up to N-bounded variability and delta-robust violations";
      break;
    case SynthesisOutcome::Status::Timeout:
      out.status = CheckOutcome::Status::Timeout;
      break;
    case SynthesisOutcome::Status::Error:
      out.status = CheckOutcome::Status::Error;
      out.message = out.dual.message;
      break;
  }
  return out;
}

MiningOutcome mine_parameter(const ParsedSpec& spec, const SystemModel& model,
                             double horizon, int n, const DriverConfig& config) {
  MiningOutcome out;
  if (!spec.timing_domains.empty()) {
    out.message = "timing parameters cannot be mined (they enter the window "
                  "arithmetic nonlinearly); magnitude parameters only";
    return out;
  }
  if (spec.magnitude_domains.size() != 1) {
    out.message = "mining needs exactly one magnitude parameter";
    return out;
  }
  const auto& [pname, pdom] = *spec.magnitude_domains.begin();

  FormulaPtr phi;
  try {
    phi = prepare_formula(spec.formula);
  } catch (const std::exception& e) {
    out.message = e.what();
    return out;
  }

  double t0 = now_seconds();
  try {
    EncodingContext ctx =
        build_encoding(phi, model, horizon, n, config, &pname, &pdom);
    dump_encoding(ctx, config);
    SolveResult res = ctx.model().solve(config.solver);
    switch (res.status) {
      case SolveResult::Status::Optimal:
      case SolveResult::Status::Feasible: {
        auto assignment = ctx.model().bind_solution(res.values);
        double pstar = assignment.at("par_" + pname);
        Decoded dec = decode_trace(ctx, assignment);
        FormulaPtr inst = prepare_formula(instantiate(spec, {{pname, pstar}}, {}));
        ValidationReport rep =
            validate(dec.trace, inst, dec.gamma, dec.theta, config.delta);
        out.stats.push_back({n, "feasible", now_seconds() - t0});
        if (!rep.sat_ok)
          throw std::runtime_error(
              "soundness violation: mining witness failed monitor validation");
        out.status = res.hit_time_limit ? MiningOutcome::Status::Timeout
                                        : MiningOutcome::Status::Optimum;
        out.best_value = pstar;
        out.witness = std::move(dec.trace);
        out.n_used = n;
        out.validation = rep;
        return out;
      }
      case SolveResult::Status::Infeasible:
        out.status = MiningOutcome::Status::Infeasible;
        out.stats.push_back({n, "infeasible", now_seconds() - t0});
        return out;
      case SolveResult::Status::TimeLimit:
        out.status = MiningOutcome::Status::Timeout;
        out.stats.push_back({n, "timeout", now_seconds() - t0});
        return out;
      case SolveResult::Status::Error:
        out.status = MiningOutcome::Status::Error;
        out.message = res.message;
        return out;
    }
  } catch (const std::exception& e) {
    std::string what = e.what();
    if (what.rfind("soundness violation", 0) == 0) throw;
    out.status = MiningOutcome::Status::Error;
    out.message = what;
  }
  return out;
}

}  // namespace stlts
