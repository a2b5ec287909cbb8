#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <fstream>
#include <sstream>

namespace stlts::test {

LinearPredicate pred_ge(const std::string& v, double c) {
  LinearPredicate p;
  p.coeffs[v] = 1.0;
  p.offset = -c;
  return p;
}

LinearPredicate pred_le(const std::string& v, double c) {
  LinearPredicate p;
  p.coeffs[v] = -1.0;
  p.offset = c;
  return p;
}

Interval win(double lo, double hi) {
  Interval w;
  w.lo = lo;
  w.hi = hi;
  return w;
}

Interval unbounded() {
  return win(0.0, std::numeric_limits<double>::infinity());
}

PwlTrace make_trace(const std::vector<double>& times,
                    const std::vector<std::map<std::string, double>>& states) {
  TimedStateSequence seq;
  seq.times = times;
  seq.states = states;
  return PwlTrace(std::move(seq));
}

PwlTrace make_trace1(const std::string& var, const std::vector<double>& times,
                     const std::vector<double>& values) {
  TimedStateSequence seq;
  seq.times = times;
  for (double v : values) seq.states.push_back({{var, v}});
  return PwlTrace(std::move(seq));
}

PwlTrace random_trace(std::mt19937& rng, const std::vector<std::string>& vars,
                      int knots, double horizon, double lo, double hi) {
  std::uniform_real_distribution<double> uval(lo, hi);
  std::uniform_real_distribution<double> ugap(0.2, 1.0);
  std::vector<double> gaps(knots - 1);
  double total = 0;
  for (auto& g : gaps) {
    g = ugap(rng);
    total += g;
  }
  TimedStateSequence seq;
  double t = 0;
  seq.times.push_back(0.0);
  for (int i = 0; i + 1 < knots; ++i) {
    t += gaps[i] / total * horizon;
    seq.times.push_back(i + 2 == knots ? horizon : t);
  }
  for (int i = 0; i < knots; ++i) {
    State st;
    for (const auto& v : vars) st[v] = uval(rng);
    seq.states.push_back(std::move(st));
  }
  return PwlTrace(std::move(seq));
}

FormulaPtr random_formula(std::mt19937& rng, const std::vector<std::string>& vars,
                          int max_depth, double horizon, double vlo, double vhi,
                          bool allow_unbounded) {
  std::uniform_real_distribution<double> uval(vlo, vhi);
  std::uniform_int_distribution<int> uvar(0, static_cast<int>(vars.size()) - 1);
  auto atom = [&]() {
    LinearPredicate p;
    if (vars.size() > 1 && rng() % 3 == 0) {
      // difference predicate between two distinct variables
      int a = uvar(rng), b = uvar(rng);
      while (b == a) b = uvar(rng);
      p.coeffs[vars[a]] = 1.0;
      p.coeffs[vars[b]] = -1.0;
      p.offset = uval(rng) - uval(rng);
    } else {
      p.coeffs[vars[uvar(rng)]] = (rng() % 2 == 0) ? 1.0 : -1.0;
      p.offset = (rng() % 2 == 0) ? -uval(rng) : uval(rng);
    }
    return Formula::atom(p);
  };
  if (max_depth <= 0) return atom();
  auto sub = [&]() {
    return random_formula(rng, vars, max_depth - 1, horizon, vlo, vhi,
                          allow_unbounded);
  };
  auto random_window = [&]() {
    std::uniform_real_distribution<double> ufrac(0.0, 0.45);
    double a = ufrac(rng) * horizon;
    double len = std::max(0.05 * horizon, ufrac(rng) * horizon);
    return win(a, a + len);
  };
  switch (rng() % 8) {
    case 0: return Formula::conj({sub(), sub()});
    case 1: return Formula::disj({sub(), sub()});
    case 2: return Formula::negation(sub());
    case 3: return Formula::eventually(random_window(), sub());
    case 4: return Formula::always(random_window(), sub());
    case 5:
      return allow_unbounded ? Formula::eventually(unbounded(), sub())
                             : Formula::eventually(random_window(), sub());
    case 6: return Formula::until(random_window(), sub(), sub());
    default:
      return allow_unbounded ? Formula::until(unbounded(), sub(), sub())
                             : Formula::release(random_window(), sub(), sub());
  }
}

bool naive_sat(const PwlTrace& sigma, const FormulaPtr& phi, double t,
               int samples_per_unit) {
  double T = sigma.horizon();
  auto grid = [&](double lo, double hi) {
    std::vector<double> ts;
    int n = std::max(2, static_cast<int>((hi - lo) * samples_per_unit));
    for (int i = 0; i <= n; ++i) ts.push_back(lo + (hi - lo) * i / n);
    return ts;
  };
  switch (phi->kind) {
    case NodeKind::True: return true;
    case NodeKind::False: return false;
    case NodeKind::Atom:
      return sigma.margin_at(phi->pred, std::min(t, T)) >= -kTimeTol;
    case NodeKind::Not: return !naive_sat(sigma, phi->children[0], t, samples_per_unit);
    case NodeKind::And: {
      for (const auto& c : phi->children)
        if (!naive_sat(sigma, c, t, samples_per_unit)) return false;
      return true;
    }
    case NodeKind::Or: {
      for (const auto& c : phi->children)
        if (naive_sat(sigma, c, t, samples_per_unit)) return true;
      return false;
    }
    case NodeKind::Eventually: {
      double lo = t + phi->window.lo;
      double hi = std::isinf(phi->window.hi) ? std::max(T, lo) + 0.5
                                             : t + phi->window.hi;
      for (double s : grid(lo, hi))
        if (naive_sat(sigma, phi->children[0], s, samples_per_unit)) return true;
      return false;
    }
    case NodeKind::Always: {
      double lo = t + phi->window.lo;
      double hi = std::isinf(phi->window.hi) ? std::max(T, lo) + 0.5
                                             : t + phi->window.hi;
      for (double s : grid(lo, hi))
        if (!naive_sat(sigma, phi->children[0], s, samples_per_unit)) return false;
      return true;
    }
    case NodeKind::Until: {
      double lo = t + phi->window.lo;
      double hi = std::isinf(phi->window.hi) ? std::max(T, lo) + 0.5
                                             : t + phi->window.hi;
      for (double s : grid(lo, hi)) {
        if (!naive_sat(sigma, phi->children[1], s, samples_per_unit)) continue;
        bool pre = true;
        for (double s2 : grid(t, s))
          if (s2 < s && !naive_sat(sigma, phi->children[0], s2, samples_per_unit)) {
            pre = false;
            break;
          }
        if (pre) return true;
      }
      return false;
    }
    case NodeKind::Release: {
      // forall s in I: phi2 at s or exists s2 < s with phi1
      double lo = t + phi->window.lo;
      double hi = std::isinf(phi->window.hi) ? std::max(T, lo) + 0.5
                                             : t + phi->window.hi;
      for (double s : grid(lo, hi)) {
        if (naive_sat(sigma, phi->children[1], s, samples_per_unit)) continue;
        bool rescued = false;
        for (double s2 : grid(t, s))
          if (s2 < s && naive_sat(sigma, phi->children[0], s2, samples_per_unit)) {
            rescued = true;
            break;
          }
        if (!rescued) return false;
      }
      return true;
    }
  }
  return false;
}

ParsedLp parse_lp(const std::string& text) {
  ParsedLp lp;
  std::istringstream is(text);
  std::string line, section;
  auto tokens_of = [](const std::string& s) {
    std::istringstream ts(s);
    std::vector<std::string> toks;
    std::string t;
    while (ts >> t) toks.push_back(t);
    return toks;
  };
  auto parse_terms = [&](std::vector<std::string> toks) {
    std::vector<std::pair<std::string, double>> terms;
    double sign = 1.0;
    for (size_t i = 0; i < toks.size();) {
      if (toks[i] == "+") { sign = 1.0; ++i; continue; }
      if (toks[i] == "-") { sign = -1.0; ++i; continue; }
      double coef = std::stod(toks[i]);
      terms.push_back({toks[i + 1], sign * coef});
      sign = 1.0;
      i += 2;
    }
    return terms;
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::string lower = line;
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    if (lower.rfind("maximize", 0) == 0) { lp.maximize = true; section = "obj"; continue; }
    if (lower.rfind("minimize", 0) == 0) { lp.maximize = false; section = "obj"; continue; }
    if (lower.rfind("subject to", 0) == 0) { section = "st"; continue; }
    if (lower.rfind("bounds", 0) == 0) { section = "bounds"; continue; }
    if (lower.rfind("binaries", 0) == 0) { section = "bin"; continue; }
    if (lower.rfind("end", 0) == 0) break;
    if (section == "obj") {
      auto body = line.substr(line.find(':') + 1);
      lp.objective = parse_terms(tokens_of(body));
    } else if (section == "st") {
      auto body = line.substr(line.find(':') + 1);
      std::string sense;
      for (const char* s : {"<=", ">=", "="}) {
        auto pos = body.find(s);
        if (pos != std::string::npos) {
          sense = s;
          ParsedLp::Row row;
          row.terms = parse_terms(tokens_of(body.substr(0, pos)));
          row.sense = sense;
          row.rhs = std::stod(body.substr(pos + sense.size()));
          lp.rows.push_back(std::move(row));
          break;
        }
      }
    } else if (section == "bounds") {
      auto toks = tokens_of(line);
      lp.bounds[toks[2]] = {std::stod(toks[0]), std::stod(toks[4])};
    } else if (section == "bin") {
      lp.binaries.push_back(tokens_of(line)[0]);
    }
  }
  return lp;
}

std::vector<double> derive_stable_partition(const PwlTrace& sigma,
                                            const FormulaPtr& phi_nnf,
                                            double delta) {
  std::set<double> points(sigma.knots().times.begin(), sigma.knots().times.end());
  for (const auto& psi : enumerate_subformulas(phi_nnf)) {
    for (const auto& s :
         {truth_intervals(sigma, psi),
          truth_intervals(sigma, delta_tighten(psi, delta))}) {
      for (const auto& iv : s.items()) {
        points.insert(iv.lo);
        points.insert(iv.hi);
      }
    }
  }
  std::vector<double> gamma;
  double T = sigma.horizon();
  for (double p : points)
    if (p > 1e-9 && p < T - 1e-9) gamma.push_back(p);
  // merge near-duplicates so every interval is a usable MILP interval
  std::vector<double> out{0.0};
  for (double p : gamma)
    if (p - out.back() > 1e-6) out.push_back(p);
  if (T - out.back() <= 1e-6) out.pop_back();
  out.push_back(T);
  return out;
}

SystemModel identity_model_for(const PwlTrace& sigma, double pad) {
  SystemModel m;
  m.kind = ModelKind::Identity;
  m.horizon = sigma.horizon();
  for (const auto& v : sigma.variables()) {
    double lo = 1e100, hi = -1e100;
    for (const auto& st : sigma.knots().states) {
      lo = std::min(lo, st.at(v));
      hi = std::max(hi, st.at(v));
    }
    m.identity.variables[v] = {lo - pad, hi + pad};
  }
  return m;
}

std::string benchmarks_dir() { return std::string(STLTS_SOURCE_DIR) + "/benchmarks"; }

ParsedSpec parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_spec(os.str());
}

DriverConfig quick_config(double time_limit) {
  DriverConfig c;
  c.solver.time_limit = time_limit;
  return c;
}

}  // namespace stlts::test
