// Top-level solvers: trace synthesis with the incrementing-N strategy,
// bounded model checking as its dual, and existential magnitude-parameter
// mining. Every reported trace is re-validated by the exact monitor.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stlts/formula.hpp"
#include "stlts/milp.hpp"
#include "stlts/model_encoders.hpp"
#include "stlts/monitor.hpp"
#include "stlts/signal.hpp"

namespace stlts {

struct DriverConfig {
  double delta = 0.1;
  double epsilon = 1e-4;
  int beta = 8;
  SolverConfig solver;            // solver.time_limit = total budget
  std::string dump_lp;            // write the (last) encoding here if set
  std::string dump_symbols;       // sidecar variable-meaning JSON
  bool maximize_margins = false;  // optional anytime objective
};

struct ValidationReport {
  bool checked = false;
  bool sat_ok = false;
  bool conservative_ok = false;
  double robustness = 0.0;
  std::string detail;

  bool ok() const { return checked && sat_ok && conservative_ok; }
};

struct PerNStat {
  int n = 0;
  std::string status;
  double seconds = 0.0;
};

struct SynthesisOutcome {
  enum class Status { Trace, NoTraceUpToN, Timeout, Error };
  Status status = Status::Error;
  std::optional<PwlTrace> trace;
  std::vector<double> gamma;
  Valuation theta;
  int n_used = 0;
  ValidationReport validation;
  std::vector<PerNStat> stats;
  std::string message;
};

struct CheckOutcome {
  enum class Status { Holds, Counterexample, Timeout, Error };
  Status status = Status::Error;
  SynthesisOutcome dual;  // synthesis run on the negated property
  std::string message;
};

struct MiningOutcome {
  enum class Status { Optimum, Infeasible, Timeout, Error };
  Status status = Status::Error;
  double best_value = 0.0;
  std::optional<PwlTrace> witness;
  int n_used = 0;
  ValidationReport validation;
  std::vector<PerNStat> stats;
  std::string message;
};

// parse -> NNF -> bounded-U/R rewriting -> window validation.
FormulaPtr prepare_formula(const FormulaPtr& raw);

// Solves for a trace of M satisfying phi at some N in [n_min, n_max].
SynthesisOutcome synthesize(const FormulaPtr& phi_raw, const SystemModel& model,
                            double horizon, int n_min, int n_max,
                            const DriverConfig& config);

// Dual: synthesizes a counterexample of phi; infeasibility for all
// N' <= n certifies the property up to N-bounded variability and
// delta-robust violations.
CheckOutcome model_check(const FormulaPtr& phi_raw, const SystemModel& model,
                         double horizon, int n, const DriverConfig& config);

// Maximizes the single magnitude parameter of the spec at the given N.
MiningOutcome mine_parameter(const ParsedSpec& spec, const SystemModel& model,
                             double horizon, int n, const DriverConfig& config);

}  // namespace stlts
