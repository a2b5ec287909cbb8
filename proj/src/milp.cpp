#include "stlts/milp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace stlts {

VarId MilpModel::add_var(const std::string& name, VarKind kind, double lb, double ub) {
  if (by_name_.count(name))
    throw std::runtime_error("duplicate MILP variable '" + name + "'");
  if (kind == VarKind::Binary) {
    lb = 0.0;
    ub = 1.0;
  }
  if (!(lb <= ub))
    throw std::runtime_error("variable '" + name + "' has empty bounds");
  MilpVar v{name, kind, lb, ub};
  vars_.push_back(v);
  VarId id = static_cast<VarId>(vars_.size()) - 1;
  by_name_[name] = id;
  return id;
}

VarId MilpModel::add_continuous(const std::string& name, double lb, double ub) {
  return add_var(name, VarKind::Continuous, lb, ub);
}

VarId MilpModel::add_binary(const std::string& name) {
  return add_var(name, VarKind::Binary, 0, 1);
}

void MilpModel::add_lin(LinConstraint c) {
  // drop zero terms, merge duplicates
  std::map<VarId, double> merged;
  for (auto& [v, k] : c.terms) {
    if (v < 0 || v >= static_cast<VarId>(vars_.size()))
      throw std::runtime_error("constraint uses undeclared variable");
    if (k != 0.0) merged[v] += k;
  }
  c.terms.assign(merged.begin(), merged.end());
  c.terms.erase(std::remove_if(c.terms.begin(), c.terms.end(),
                               [](auto& t) { return t.second == 0.0; }),
                c.terms.end());
  lin_.push_back(std::move(c));
}

void MilpModel::add_lin(std::vector<std::pair<VarId, double>> terms, Sense sense,
                        double rhs, const std::string& name) {
  LinConstraint c;
  c.terms = std::move(terms);
  c.sense = sense;
  c.rhs = rhs;
  c.name = name;
  add_lin(std::move(c));
}

void MilpModel::add_cond(CondConstraint c) {
  if (c.body.sense == Sense::Eq)
    throw std::runtime_error("guarded constraint body must be <= or >=");
  cond_.push_back(std::move(c));
}

void MilpModel::add_cond(VarId guard, int value,
                         std::vector<std::pair<VarId, double>> terms, Sense sense,
                         double rhs, const std::string& name) {
  CondConstraint c;
  c.guard_var = guard;
  c.guard_value = value;
  c.body.terms = std::move(terms);
  c.body.sense = sense;
  c.body.rhs = rhs;
  c.body.name = name;
  add_cond(std::move(c));
}

void MilpModel::fix_binary(VarId z, int value) {
  add_lin({{z, 1.0}}, Sense::Eq, value);
}

void MilpModel::bool_not(VarId z, VarId a) {
  add_lin({{z, 1.0}, {a, 1.0}}, Sense::Eq, 1.0);
}

void MilpModel::bool_eq(VarId z, VarId a) {
  add_lin({{z, 1.0}, {a, -1.0}}, Sense::Eq, 0.0);
}

void MilpModel::bool_and(VarId z, const std::vector<VarId>& args) {
  for (VarId a : args) add_lin({{z, 1.0}, {a, -1.0}}, Sense::Le, 0.0);
  std::vector<std::pair<VarId, double>> terms{{z, 1.0}};
  for (VarId a : args) terms.push_back({a, -1.0});
  add_lin(std::move(terms), Sense::Ge, 1.0 - static_cast<double>(args.size()));
}

void MilpModel::bool_or(VarId z, const std::vector<VarId>& args) {
  for (VarId a : args) add_lin({{z, 1.0}, {a, -1.0}}, Sense::Ge, 0.0);
  std::vector<std::pair<VarId, double>> terms{{z, 1.0}};
  for (VarId a : args) terms.push_back({a, -1.0});
  add_lin(std::move(terms), Sense::Le, 0.0);
}

void MilpModel::add_disjunction(const std::vector<Disjunct>& ds,
                                const std::string& name_stem) {
  std::vector<std::pair<VarId, double>> cover;
  double cover_rhs = 1.0;
  int k = 0;
  for (const auto& d : ds) {
    if (d.is_literal) {
      if (d.positive) {
        cover.push_back({d.var, 1.0});
      } else {
        cover.push_back({d.var, -1.0});
        cover_rhs -= 1.0;
      }
    } else {
      VarId z = add_binary(name_stem + "_z" + std::to_string(k++));
      add_cond(z, 1, d.terms, Sense::Ge, d.rhs, name_stem);
      cover.push_back({z, 1.0});
    }
  }
  add_lin(std::move(cover), Sense::Ge, cover_rhs, name_stem + "_cover");
}

void MilpModel::set_objective(ObjectiveSense sense,
                              std::vector<std::pair<VarId, double>> terms) {
  obj_sense_ = sense;
  obj_ = std::move(terms);
}

VarId MilpModel::find_var(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

// Range of the constraint's linear term over the declared bounds.
std::pair<double, double> MilpModel::term_range(const LinConstraint& c) const {
  double lo = 0.0, hi = 0.0;
  for (const auto& [v, k] : c.terms) {
    const MilpVar& var = vars_[v];
    if (std::isinf(var.lb) || std::isinf(var.ub))
      throw std::runtime_error("variable '" + var.name +
                               "' needs finite bounds for big-M lowering");
    double a = k * var.lb, b = k * var.ub;
    lo += std::min(a, b);
    hi += std::max(a, b);
  }
  return {lo, hi};
}

MilpModel MilpModel::lower_conditionals(double big_m_cap) const {
  MilpModel out = *this;
  out.cond_.clear();
  for (const auto& c : cond_) {
    auto [lo, hi] = term_range(c.body);
    LinConstraint body = c.body;
    double m = 0.0;
    if (body.sense == Sense::Ge) {
      // guard miss must make  f >= rhs - M  vacuous: M = rhs - min f
      m = std::max(0.0, body.rhs - lo);
    } else {
      m = std::max(0.0, hi - body.rhs);
    }
    if (m > big_m_cap)
      throw std::runtime_error("derived big-M " + std::to_string(m) +
                               " exceeds cap for constraint '" + body.name + "'");
    // relax the body by M exactly when the guard misses:
    //   A==0 active, >= body:  f + M*A >= rhs
    //   A==1 active, >= body:  f - M*A >= rhs - M
    //   A==0 active, <= body:  f - M*A <= rhs
    //   A==1 active, <= body:  f + M*A <= rhs + M
    double coef, rhs;
    if (c.guard_value == 1) {
      coef = (body.sense == Sense::Ge) ? -m : m;
      rhs = (body.sense == Sense::Ge) ? body.rhs - m : body.rhs + m;
    } else {
      coef = (body.sense == Sense::Ge) ? m : -m;
      rhs = body.rhs;
    }
    body.terms.push_back({c.guard_var, coef});
    body.rhs = rhs;
    out.add_lin(std::move(body));
  }
  return out;
}

// ---------------------------------------------------------------------------
// LP format

static std::string lpnum(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

static void write_terms(std::ostringstream& os,
                        const std::vector<std::pair<VarId, double>>& terms,
                        const std::vector<MilpVar>& vars) {
  if (terms.empty()) {
    os << "0 " << vars[0].name;  // LP format needs at least one term
    return;
  }
  bool first = true;
  for (const auto& [v, k] : terms) {
    if (first) {
      if (k < 0) os << "- ";
      first = false;
    } else {
      os << (k < 0 ? " - " : " + ");
    }
    double a = std::abs(k);
    os << lpnum(a) << " " << vars[v].name;
  }
}

std::string MilpModel::write_lp() const {
  if (!cond_.empty())
    throw std::runtime_error("write_lp needs a lowered model (no guarded constraints)");
  if (vars_.empty()) throw std::runtime_error("empty model");
  std::ostringstream os;
  if (obj_sense_ == ObjectiveSense::Maximize) {
    os << "Maximize\n obj: ";
    write_terms(os, obj_, vars_);
  } else {
    os << "Minimize\n obj: ";
    if (obj_sense_ == ObjectiveSense::Feasibility) {
      os << "0 " << vars_[0].name;
    } else {
      write_terms(os, obj_, vars_);
    }
  }
  os << "\nSubject To\n";
  for (size_t i = 0; i < lin_.size(); ++i) {
    const LinConstraint& c = lin_[i];
    os << " c" << i << ": ";
    write_terms(os, c.terms, vars_);
    os << (c.sense == Sense::Le ? " <= " : c.sense == Sense::Ge ? " >= " : " = ");
    os << lpnum(c.rhs) << "\n";
  }
  os << "Bounds\n";
  for (const auto& v : vars_) {
    if (v.kind == VarKind::Binary) continue;
    os << " " << lpnum(v.lb) << " <= " << v.name << " <= " << lpnum(v.ub) << "\n";
  }
  bool any_bin = false;
  for (const auto& v : vars_)
    if (v.kind == VarKind::Binary) any_bin = true;
  if (any_bin) {
    os << "Binaries\n";
    for (const auto& v : vars_)
      if (v.kind == VarKind::Binary) os << " " << v.name << "\n";
  }
  os << "End\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Solving through an external adapter process

std::string resolve_adapter(const std::string& explicit_adapter) {
  if (!explicit_adapter.empty()) return explicit_adapter;
  if (const char* env = std::getenv("STLTS_SOLVER"); env && *env) return env;
  return std::string(STLTS_SOURCE_DIR) + "/tools/adapters/highs_lp_solve.py";
}

static std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  out += "'";
  return out;
}

SolveResult MilpModel::solve(const SolverConfig& config) const {
  SolveResult res;
  MilpModel lowered = cond_.empty() ? *this : lower_conditionals();
  std::string lp = lowered.write_lp();

  std::string dir = config.work_dir;
  if (dir.empty()) {
    const char* tmp = std::getenv("TMPDIR");
    dir = tmp && *tmp ? tmp : "/tmp";
  }
  static std::mt19937_64 rng{std::random_device{}()};
  std::string stem = dir + "/stlts_" + std::to_string(rng());
  std::string lp_path = stem + ".lp";
  std::string sol_path = stem + ".sol";
  std::string log_path = stem + ".log";
  {
    std::ofstream f(lp_path);
    if (!f) {
      res.message = "cannot write " + lp_path;
      return res;
    }
    f << lp;
  }

  std::string adapter = resolve_adapter(config.adapter);
  std::string cmd = shell_quote(adapter) + " " + shell_quote(lp_path) + " " +
                    shell_quote(sol_path) + " " +
                    std::to_string(config.time_limit) + " > " +
                    shell_quote(log_path) + " 2>&1";
  int rc = std::system(cmd.c_str());

  auto cleanup = [&]() {
    if (!config.keep_files) {
      std::remove(lp_path.c_str());
      std::remove(sol_path.c_str());
      std::remove(log_path.c_str());
    }
  };

  std::ifstream sol(sol_path);
  if (!sol) {
    std::ifstream log(log_path);
    std::ostringstream os;
    os << "solver adapter produced no solution file (exit " << rc << "): ";
    os << log.rdbuf();
    res.message = os.str();
    cleanup();
    return res;
  }
  std::string status_line;
  std::getline(sol, status_line);
  std::string word;
  {
    std::istringstream ss(status_line);
    ss >> word;
  }
  if (word == "OPTIMAL") res.status = SolveResult::Status::Optimal;
  else if (word == "FEASIBLE") res.status = SolveResult::Status::Feasible;
  else if (word == "INFEASIBLE") res.status = SolveResult::Status::Infeasible;
  else if (word == "TIMELIMIT") res.status = SolveResult::Status::TimeLimit;
  else {
    res.status = SolveResult::Status::Error;
    std::ifstream log(log_path);
    std::ostringstream os;
    os << "solver status '" << status_line << "': ";
    os << log.rdbuf();
    res.message = os.str();
    cleanup();
    return res;
  }

  std::string name;
  double value;
  while (sol >> name >> value) res.values[name] = value;

  if (res.status == SolveResult::Status::TimeLimit && !res.values.empty()) {
    // anytime contract: a time-limited incumbent is still a usable result
    res.status = SolveResult::Status::Feasible;
    res.hit_time_limit = true;
  }
  if ((res.status == SolveResult::Status::Optimal ||
       res.status == SolveResult::Status::Feasible) &&
      res.values.empty()) {
    res.status = SolveResult::Status::Error;
    res.message = "solver reported a solution but gave no values";
  }
  for (const auto& [v, k] : obj_) {
    auto it = res.values.find(vars_[v].name);
    if (it != res.values.end()) res.objective += k * it->second;
  }
  cleanup();
  return res;
}

// ---------------------------------------------------------------------------
// Solution checking

std::map<std::string, double> MilpModel::bind_solution(
    const std::map<std::string, double>& values, double tol) const {
  std::map<std::string, double> out;
  for (const auto& v : vars_) {
    auto it = values.find(v.name);
    if (it == values.end())
      throw std::runtime_error("solution missing variable '" + v.name + "'");
    double x = it->second;
    if (v.kind == VarKind::Binary) {
      double r = std::round(x);
      if (std::abs(x - r) > tol)
        throw std::runtime_error("binary '" + v.name + "' = " + std::to_string(x) +
                                 " is not within tolerance of 0/1");
      x = std::max(0.0, std::min(1.0, r));
    } else {
      x = std::max(v.lb - tol, std::min(v.ub + tol, x));
    }
    out[v.name] = x;
  }
  auto eval_terms = [&](const LinConstraint& c) {
    double s = 0.0;
    for (const auto& [v, k] : c.terms) s += k * out.at(vars_[v].name);
    return s;
  };
  double worst = 0.0;
  std::string worst_name;
  auto check = [&](const LinConstraint& c) {
    double s = eval_terms(c);
    double viol = 0.0;
    if (c.sense == Sense::Le) viol = s - c.rhs;
    else if (c.sense == Sense::Ge) viol = c.rhs - s;
    else viol = std::abs(s - c.rhs);
    // rounding a binary by up to tol shifts the row by tol * |coef|, so
    // the acceptance threshold scales with the largest coefficient
    double scale = 1.0;
    for (const auto& [v, k] : c.terms) scale = std::max(scale, std::abs(k));
    viol /= scale;
    if (viol > worst) {
      worst = viol;
      worst_name = c.name.empty() ? "<unnamed>" : c.name;
    }
  };
  for (const auto& c : lin_) check(c);
  for (const auto& c : cond_) {
    double g = out.at(vars_[c.guard_var].name);
    if (static_cast<int>(std::round(g)) == c.guard_value) check(c.body);
  }
  if (worst > tol)
    throw std::runtime_error("solution violates constraint '" + worst_name +
                             "' by " + std::to_string(worst) + " (scaled)");
  return out;
}

}  // namespace stlts
