// Solver-independent MILP model: variables, linear constraints, guarded
// (indicator-style) constraints, big-M lowering, LP-format emission, and a
// subprocess runner for external LP-file solvers.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace stlts {

using VarId = int;

enum class VarKind { Continuous, Binary };

struct MilpVar {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lb = 0.0, ub = 0.0;  // binaries are implicitly [0, 1]
};

enum class Sense { Le, Eq, Ge };

struct LinConstraint {
  std::vector<std::pair<VarId, double>> terms;
  Sense sense = Sense::Le;
  double rhs = 0.0;
  std::string name;
};

// guard_var == guard_value  =>  body (body sense must be Le or Ge).
struct CondConstraint {
  VarId guard_var = -1;
  int guard_value = 0;
  LinConstraint body;
};

enum class ObjectiveSense { Feasibility, Minimize, Maximize };

struct SolveResult {
  enum class Status { Optimal, Feasible, Infeasible, TimeLimit, Error };
  Status status = Status::Error;
  std::map<std::string, double> values;
  double objective = 0.0;
  bool hit_time_limit = false;
  std::string message;
};

struct SolverConfig {
  std::string adapter;       // executable; "" = STLTS_SOLVER env or bundled
  double time_limit = 600.0; // seconds
  bool keep_files = false;
  std::string work_dir;      // "" = std temp dir
};

class MilpModel {
 public:
  VarId add_var(const std::string& name, VarKind kind, double lb, double ub);
  VarId add_continuous(const std::string& name, double lb, double ub);
  VarId add_binary(const std::string& name);

  void add_lin(LinConstraint c);
  // terms . x  sense  rhs
  void add_lin(std::vector<std::pair<VarId, double>> terms, Sense sense,
               double rhs, const std::string& name = "");
  void add_cond(CondConstraint c);
  // guard = value  =>  terms . x  sense  rhs
  void add_cond(VarId guard, int value, std::vector<std::pair<VarId, double>> terms,
                Sense sense, double rhs, const std::string& name = "");

  // Eq-style Boolean shorthands (z and the arguments must be binary).
  void fix_binary(VarId z, int value);
  void bool_not(VarId z, VarId a);                         // z = !a
  void bool_and(VarId z, const std::vector<VarId>& args);  // z = /\ args
  void bool_or(VarId z, const std::vector<VarId>& args);   // z = \/ args
  void bool_eq(VarId z, VarId a);                          // z = a

  // One clause of a disjunction: either a binary literal or a linear
  // inequality terms . x >= rhs that will get a fresh selector binary.
  struct Disjunct {
    static Disjunct lit(VarId var, bool positive) {
      Disjunct d;
      d.is_literal = true;
      d.var = var;
      d.positive = positive;
      return d;
    }
    static Disjunct ge(std::vector<std::pair<VarId, double>> terms, double rhs) {
      Disjunct d;
      d.terms = std::move(terms);
      d.rhs = rhs;
      return d;
    }
    bool is_literal = false;
    VarId var = -1;
    bool positive = true;
    std::vector<std::pair<VarId, double>> terms;
    double rhs = 0.0;
  };

  // Adds "at least one disjunct holds". Inequality disjuncts f >= rhs get
  // a selector Z with Z = 1 => f >= rhs; the selectors and literals sum
  // to >= 1. name_stem seeds deterministic aux names.
  void add_disjunction(const std::vector<Disjunct>& ds, const std::string& name_stem);

  void set_objective(ObjectiveSense sense, std::vector<std::pair<VarId, double>> terms);

  const std::vector<MilpVar>& vars() const { return vars_; }
  const std::vector<LinConstraint>& lin_constraints() const { return lin_; }
  const std::vector<CondConstraint>& cond_constraints() const { return cond_; }
  ObjectiveSense objective_sense() const { return obj_sense_; }
  const std::vector<std::pair<VarId, double>>& objective_terms() const { return obj_; }

  VarId find_var(const std::string& name) const;  // -1 if absent

  // Replaces every guarded constraint with its big-M form; the constant is
  // derived per constraint from the declared variable bounds and must not
  // exceed big_m_cap.
  MilpModel lower_conditionals(double big_m_cap = 1e6) const;

  // CPLEX-LP text of a lowered model; deterministic (declaration order).
  std::string write_lp() const;

  // Lowers, writes the LP file, runs the adapter, parses the solution.
  SolveResult solve(const SolverConfig& config) const;

  // Rounds binaries (tolerance 1e-6), re-checks every constraint (guarded
  // ones in guarded semantics) at tolerance; throws with the worst
  // violation on failure. Returns the checked assignment by variable name.
  std::map<std::string, double> bind_solution(
      const std::map<std::string, double>& values, double tol = 1e-6) const;

 private:
  std::pair<double, double> term_range(const LinConstraint& c) const;

  std::vector<MilpVar> vars_;
  std::map<std::string, VarId> by_name_;
  std::vector<LinConstraint> lin_;
  std::vector<CondConstraint> cond_;
  ObjectiveSense obj_sense_ = ObjectiveSense::Feasibility;
  std::vector<std::pair<VarId, double>> obj_;
  int aux_counter_ = 0;
};

// Default adapter path resolution: explicit config, then the STLTS_SOLVER
// environment variable, then the bundled scipy/HiGHS adapter.
std::string resolve_adapter(const std::string& explicit_adapter);

}  // namespace stlts
