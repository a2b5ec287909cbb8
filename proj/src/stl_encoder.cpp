#include "stlts/stl_encoder.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace stlts {

namespace {

std::string itos(int i) { return std::to_string(i); }

}  // namespace

EncodingContext::EncodingContext(FormulaPtr phi, EncodingParams params)
    : phi_(std::move(phi)), params_(params) {
  if (params_.n_intervals < 1) throw std::runtime_error("N must be >= 1");
  if (!(params_.horizon > 0)) throw std::runtime_error("horizon must be positive");
  if (!(params_.delta > 0)) throw std::runtime_error("delta must be positive");
  if (!(params_.epsilon > 0)) throw std::runtime_error("epsilon must be positive");
  if (params_.horizon < params_.n_intervals * params_.epsilon)
    throw std::runtime_error(
        "horizon too small: T must be at least N*epsilon for a time sequence");
  validate_windows(phi_);
  for (const auto& sub : enumerate_subformulas(phi_)) {
    if (sub->kind == NodeKind::Not)
      throw std::runtime_error("encoder expects NNF input (no negation nodes)");
    if ((sub->kind == NodeKind::Until || sub->kind == NodeKind::Release) &&
        !sub->window.unbounded())
      throw std::runtime_error(
          "encoder expects bounded until/release to be rewritten away");
    if (sub->is_temporal() && sub->window.has_param())
      throw std::runtime_error("timing parameters must be instantiated before encoding");
  }

  subs_ = enumerate_subformulas(phi_);
  for (size_t k = 0; k < subs_.size(); ++k)
    sub_index_[pretty_print(subs_[k])] = static_cast<int>(k);

  int N = params_.n_intervals;
  val_.resize(subs_.size());
  for (size_t k = 0; k < subs_.size(); ++k) {
    val_[k].resize(N + 1, -1);
    for (int i = 1; i <= N; ++i) {
      std::string name = "val_" + itos(static_cast<int>(k)) + "_" + itos(i);
      val_[k][i] = model_.add_binary(name);
      note_symbol(name, "<" + pretty_print(subs_[k]) + ">_" + itos(i));
    }
  }
  dur_.assign(N + 1, -1);
}

void EncodingContext::encode_time_sequence() {
  int N = params_.n_intervals;
  double T = params_.horizon;
  gamma_.clear();
  for (int i = 0; i <= N; ++i) {
    VarId g = model_.add_continuous("g_" + itos(i), 0.0, T);
    gamma_.push_back(g);
    note_symbol("g_" + itos(i), "gamma_" + itos(i));
  }
  model_.add_lin({{gamma_[0], 1.0}}, Sense::Eq, 0.0, "gamma0");
  model_.add_lin({{gamma_[N], 1.0}}, Sense::Eq, T, "gammaN");
  for (int i = 1; i <= N; ++i)
    model_.add_lin({{gamma_[i], 1.0}, {gamma_[i - 1], -1.0}}, Sense::Ge,
                   params_.epsilon, "gap_" + itos(i));
}

VarId EncodingContext::duration(int i) {
  if (i < 1 || i > params_.n_intervals) throw std::runtime_error("bad interval index");
  if (dur_[i] < 0) {
    VarId d = model_.add_continuous("d_" + itos(i), params_.epsilon, params_.horizon);
    model_.add_lin({{d, 1.0}, {gamma_[i], -1.0}, {gamma_[i - 1], 1.0}}, Sense::Eq,
                   0.0, "dur_" + itos(i));
    note_symbol("d_" + itos(i), "gamma_" + itos(i) + " - gamma_" + itos(i - 1));
    dur_[i] = d;
  }
  return dur_[i];
}

void EncodingContext::register_trace_var(const std::string& var, double lb, double ub) {
  if (trace_.count(var))
    throw std::runtime_error("trace variable '" + var + "' registered twice");
  if (std::isinf(lb) || std::isinf(ub))
    throw std::runtime_error("trace variable '" + var + "' needs finite bounds");
  std::vector<VarId> ids;
  for (int i = 0; i <= params_.n_intervals; ++i) {
    std::string name = "x_" + itos(i) + "_" + var;
    ids.push_back(model_.add_continuous(name, lb, ub));
    note_symbol(name, var + "(gamma_" + itos(i) + ")");
  }
  trace_[var] = std::move(ids);
}

bool EncodingContext::has_trace_var(const std::string& var) const {
  return trace_.count(var) > 0;
}

VarId EncodingContext::trace_var(const std::string& var, int i) const {
  auto it = trace_.find(var);
  if (it == trace_.end())
    throw std::runtime_error("formula references variable '" + var +
                             "' absent from the system model");
  return it->second.at(i);
}

std::vector<std::string> EncodingContext::trace_var_names() const {
  std::vector<std::string> names;
  for (const auto& [v, _] : trace_) names.push_back(v);
  return names;
}

VarId EncodingContext::register_param(const std::string& name, double lo, double hi) {
  if (params_vars_.count(name))
    throw std::runtime_error("parameter '" + name + "' registered twice");
  VarId id = model_.add_continuous("par_" + name, lo, hi);
  params_vars_[name] = id;
  note_symbol("par_" + name, "magnitude parameter " + name);
  return id;
}

VarId EncodingContext::param_var(const std::string& name) const {
  auto it = params_vars_.find(name);
  if (it == params_vars_.end())
    throw std::runtime_error("parameter '" + name + "' is not registered");
  return it->second;
}

int EncodingContext::sub_index(const FormulaPtr& f) const {
  auto it = sub_index_.find(pretty_print(f));
  if (it == sub_index_.end())
    throw std::runtime_error("formula node is not a registered subformula");
  return it->second;
}

void EncodingContext::note_symbol(const std::string& var_name,
                                  const std::string& meaning) {
  symbols_[var_name] = meaning;
}

std::string EncodingContext::symbol_map_json() const {
  std::ostringstream os;
  os << "{\n";
  bool first = true;
  for (const auto& [k, v] : symbols_) {
    if (!first) os << ",\n";
    first = false;
    os << "  \"" << k << "\": \"";
    for (char c : v) {
      if (c == '"' || c == '\\') os << '\\';
      os << c;
    }
    os << "\"";
  }
  os << "\n}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Constraint families

namespace {

// terms of an atom's margin at knot i: c.x_i (+ param); the constant part
// of the margin is the atom offset, returned separately.
std::vector<std::pair<VarId, double>> margin_terms(EncodingContext& ctx,
                                                   const LinearPredicate& p, int i) {
  std::vector<std::pair<VarId, double>> terms;
  for (const auto& [v, c] : p.coeffs) terms.push_back({ctx.trace_var(v, i), c});
  if (p.has_param()) terms.push_back({ctx.param_var(*p.param), p.param_coeff});
  return terms;
}

}  // namespace

void StlEncoder::encode_atomics(EncodingContext& ctx) {
  MilpModel& m = ctx.model();
  int N = ctx.n();
  double delta = ctx.params().delta;
  double eps = ctx.params().epsilon;

  int atom_idx = 0;
  for (const auto& sub : ctx.subformulas()) {
    if (sub->kind != NodeKind::Atom) continue;
    const LinearPredicate& p = sub->pred;
    int a = atom_idx++;
    int k = ctx.sub_index(sub);

    std::vector<VarId> zeta(N + 1), zetad(N + 1);
    for (int i = 0; i <= N; ++i) {
      zeta[i] = m.add_binary("zp_" + itos(a) + "_" + itos(i));
      zetad[i] = m.add_binary("zd_" + itos(a) + "_" + itos(i));
      ctx.note_symbol("zp_" + itos(a) + "_" + itos(i),
                      "zeta[" + pretty_print(sub) + "]_" + itos(i));
      ctx.note_symbol("zd_" + itos(a) + "_" + itos(i),
                      "zeta_delta[" + pretty_print(sub) + "]_" + itos(i));

      // margin(x_i) = terms + offset; holds iff >= 0
      auto terms = margin_terms(ctx, p, i);
      std::string stem = "atom" + itos(a) + "_" + itos(i);
      m.add_cond(zeta[i], 1, terms, Sense::Ge, -p.offset, stem + "_t");
      m.add_cond(zeta[i], 0, terms, Sense::Le, -p.offset - eps, stem + "_f");
      m.add_cond(zetad[i], 1, terms, Sense::Ge, -p.offset + delta, stem + "_dt");
      m.add_cond(zetad[i], 0, terms, Sense::Le, -p.offset + delta - eps, stem + "_df");
    }

    // delta-crossing pairs must be stationary
    for (int i = 0; i < N; ++i) {
      m.add_lin({{zeta[i], 1.0}, {zetad[i + 1], -1.0}, {zetad[i], 1.0}}, Sense::Ge,
                0.0, "cross_up_" + itos(a) + "_" + itos(i));
      m.add_lin({{zeta[i + 1], 1.0}, {zetad[i], -1.0}, {zetad[i + 1], 1.0}}, Sense::Ge,
                0.0, "cross_dn_" + itos(a) + "_" + itos(i));
    }

    // <p>_i = zetad_{i-1} or zetad_i
    for (int i = 1; i <= N; ++i) {
      VarId v = ctx.valuation(k, i);
      m.add_lin({{v, 1.0}, {zetad[i - 1], -1.0}}, Sense::Ge, 0.0);
      m.add_lin({{v, 1.0}, {zetad[i], -1.0}}, Sense::Ge, 0.0);
      m.add_lin({{v, 1.0}, {zetad[i - 1], -1.0}, {zetad[i], -1.0}}, Sense::Le, 0.0);
    }
  }
}

void StlEncoder::encode_boolean(EncodingContext& ctx) {
  MilpModel& m = ctx.model();
  int N = ctx.n();
  for (const auto& sub : ctx.subformulas()) {
    if (sub->kind == NodeKind::True) {
      for (int i = 1; i <= N; ++i) m.fix_binary(ctx.valuation(ctx.sub_index(sub), i), 1);
      continue;
    }
    if (sub->kind == NodeKind::False) {
      for (int i = 1; i <= N; ++i) m.fix_binary(ctx.valuation(ctx.sub_index(sub), i), 0);
      continue;
    }
    if (sub->kind != NodeKind::And && sub->kind != NodeKind::Or) continue;
    int k = ctx.sub_index(sub);
    int mm = static_cast<int>(sub->children.size());
    for (int i = 1; i <= N; ++i) {
      VarId parent = ctx.valuation(k, i);
      std::vector<std::pair<VarId, double>> sum{{parent, 1.0}};
      for (const auto& c : sub->children) {
        VarId child = ctx.valuation(ctx.sub_index(c), i);
        if (sub->kind == NodeKind::And) {
          m.add_lin({{parent, 1.0}, {child, -1.0}}, Sense::Le, 0.0);
        } else {
          m.add_lin({{parent, 1.0}, {child, -1.0}}, Sense::Ge, 0.0);
        }
        sum.push_back({child, -1.0});
      }
      if (sub->kind == NodeKind::And) {
        m.add_lin(std::move(sum), Sense::Ge, 1.0 - mm);
      } else {
        m.add_lin(std::move(sum), Sense::Le, 0.0);
      }
    }
  }
}

void StlEncoder::encode_unbounded(EncodingContext& ctx) {
  MilpModel& m = ctx.model();
  int N = ctx.n();
  for (const auto& sub : ctx.subformulas()) {
    if (!sub->is_temporal() || !sub->window.unbounded()) continue;
    int k = ctx.sub_index(sub);
    switch (sub->kind) {
      case NodeKind::Eventually: {
        int c = ctx.sub_index(sub->children[0]);
        for (int i = 1; i < N; ++i)
          m.bool_or(ctx.valuation(k, i),
                    {ctx.valuation(c, i), ctx.valuation(k, i + 1)});
        m.bool_eq(ctx.valuation(k, N), ctx.valuation(c, N));
        break;
      }
      case NodeKind::Always: {
        int c = ctx.sub_index(sub->children[0]);
        for (int i = 1; i < N; ++i)
          m.bool_and(ctx.valuation(k, i),
                     {ctx.valuation(c, i), ctx.valuation(k, i + 1)});
        m.bool_eq(ctx.valuation(k, N), ctx.valuation(c, N));
        break;
      }
      case NodeKind::Until: {
        int c1 = ctx.sub_index(sub->children[0]);
        int c2 = ctx.sub_index(sub->children[1]);
        for (int i = 1; i < N; ++i) {
          VarId step = m.add_binary("aux_u" + itos(k) + "_" + itos(i));
          m.bool_and(step, {ctx.valuation(k, i + 1), ctx.valuation(c1, i)});
          m.bool_or(ctx.valuation(k, i), {ctx.valuation(c2, i), step});
        }
        m.bool_eq(ctx.valuation(k, N), ctx.valuation(c2, N));
        break;
      }
      case NodeKind::Release: {
        int c1 = ctx.sub_index(sub->children[0]);
        int c2 = ctx.sub_index(sub->children[1]);
        for (int i = 1; i < N; ++i) {
          VarId step = m.add_binary("aux_r" + itos(k) + "_" + itos(i));
          m.bool_or(step, {ctx.valuation(k, i + 1), ctx.valuation(c1, i)});
          m.bool_and(ctx.valuation(k, i), {ctx.valuation(c2, i), step});
        }
        m.bool_eq(ctx.valuation(k, N), ctx.valuation(c2, N));
        break;
      }
      default:
        break;
    }
  }
}

void StlEncoder::encode_bounded_always(EncodingContext& ctx, const FormulaPtr& node) {
  MilpModel& m = ctx.model();
  int N = ctx.n();
  double T = ctx.horizon();
  double a = node->window.lo, b = node->window.hi;
  double eps = ctx.params().epsilon;
  if (std::isinf(b) || !(a < b)) throw std::runtime_error("bad bounded window");
  int k = ctx.sub_index(node);
  int c = ctx.sub_index(node->children[0]);

  // S accumulates how long the child has been true before gamma_i
  std::vector<VarId> S(N + 1);
  for (int i = 0; i <= N; ++i) {
    S[i] = m.add_continuous("S_" + itos(k) + "_" + itos(i), 0.0, T);
    ctx.note_symbol("S_" + itos(k) + "_" + itos(i),
                    "S[" + pretty_print(node->children[0]) + "]_" + itos(i));
  }
  m.add_lin({{S[0], 1.0}}, Sense::Eq, 0.0);
  for (int i = 1; i <= N; ++i) {
    m.add_cond(ctx.valuation(c, i), 0, {{S[i], 1.0}}, Sense::Le, 0.0,
               "Sreset_" + itos(k) + "_" + itos(i));
    m.add_cond(ctx.valuation(c, i), 1,
               {{S[i], 1.0}, {S[i - 1], -1.0}, {ctx.gamma(i), -1.0}, {ctx.gamma(i - 1), 1.0}},
               Sense::Ge, 0.0, "Sgrow_" + itos(k) + "_" + itos(i));
  }

  using D = MilpModel::Disjunct;
  for (int i = 1; i <= N; ++i) {
    // positive case: <alw>_i = 1 forces the child on every interval the
    // window [gamma_{i-1}+a, gamma_i+b] can touch
    for (int j = i; j <= N; ++j) {
      std::vector<D> ds;
      ds.push_back(D::lit(ctx.valuation(k, i), false));
      ds.push_back(D::ge({{ctx.gamma(j - 1), 1.0}, {ctx.gamma(i), -1.0}}, b));
      ds.push_back(D::ge({{ctx.gamma(i - 1), 1.0}, {ctx.gamma(j), -1.0}}, eps - a));
      ds.push_back(D::lit(ctx.valuation(c, j), true));
      m.add_disjunction(ds, "alw" + itos(k) + "_p_" + itos(i) + "_" + itos(j));
    }
    {  // j = N+1 with gamma_{N+1} = inf and <child>_{N+1} = <child>_N
      std::vector<D> ds;
      ds.push_back(D::lit(ctx.valuation(k, i), false));
      ds.push_back(D::ge({{ctx.gamma(N), 1.0}, {ctx.gamma(i), -1.0}}, b));
      ds.push_back(D::lit(ctx.valuation(c, N), true));
      m.add_disjunction(ds, "alw" + itos(k) + "_p_" + itos(i) + "_end");
    }

    // negative case: <alw>_i = 0 needs a recent child-false interval
    // within reach, expressed through bounds on S
    for (int j = i; j <= N; ++j) {
      {  // gamma_j strictly inside (gamma_{i-1}+b, gamma_i+b)  =>  S_j <= b-a
        std::vector<D> ds;
        ds.push_back(D::lit(ctx.valuation(k, i), true));
        ds.push_back(D::ge({{ctx.gamma(i - 1), 1.0}, {ctx.gamma(j), -1.0}}, -b));
        ds.push_back(D::ge({{ctx.gamma(j), 1.0}, {ctx.gamma(i), -1.0}}, b));
        ds.push_back(D::ge({{S[j], -1.0}}, a - b));
        m.add_disjunction(ds, "alw" + itos(k) + "_n1_" + itos(i) + "_" + itos(j));
      }
      {  // gamma_i+b inside [gamma_{j-1}, gamma_j]  =>  S_j <= gamma_j - gamma_i - a
        std::vector<D> ds;
        ds.push_back(D::lit(ctx.valuation(k, i), true));
        ds.push_back(D::ge({{ctx.gamma(j - 1), 1.0}, {ctx.gamma(i), -1.0}}, b + eps));
        ds.push_back(D::ge({{ctx.gamma(i), 1.0}, {ctx.gamma(j), -1.0}}, eps - b));
        ds.push_back(D::ge({{ctx.gamma(j), 1.0}, {ctx.gamma(i), -1.0}, {S[j], -1.0}}, a));
        m.add_disjunction(ds, "alw" + itos(k) + "_n2_" + itos(i) + "_" + itos(j));
      }
    }
    {  // gamma_i+b beyond the horizon  =>  S_N <= max(0, gamma_N - gamma_i - a)
      std::vector<D> ds;
      ds.push_back(D::lit(ctx.valuation(k, i), true));
      ds.push_back(D::ge({{ctx.gamma(N), 1.0}, {ctx.gamma(i), -1.0}}, b));
      ds.push_back(D::ge({{S[N], -1.0}}, 0.0));
      ds.push_back(D::ge({{ctx.gamma(N), 1.0}, {ctx.gamma(i), -1.0}, {S[N], -1.0}}, a));
      m.add_disjunction(ds, "alw" + itos(k) + "_n3_" + itos(i));
    }
  }
}

void StlEncoder::encode_bounded_eventually(EncodingContext& ctx, const FormulaPtr& node) {
  MilpModel& m = ctx.model();
  int N = ctx.n();
  double T = ctx.horizon();
  double a = node->window.lo, b = node->window.hi;
  double eps = ctx.params().epsilon;
  if (std::isinf(b) || !(a < b)) throw std::runtime_error("bad bounded window");
  int k = ctx.sub_index(node);
  int c = ctx.sub_index(node->children[0]);

  // P accumulates how long the child has been false before gamma_i
  std::vector<VarId> P(N + 1);
  for (int i = 0; i <= N; ++i) {
    P[i] = m.add_continuous("P_" + itos(k) + "_" + itos(i), 0.0, T);
    ctx.note_symbol("P_" + itos(k) + "_" + itos(i),
                    "P[" + pretty_print(node->children[0]) + "]_" + itos(i));
  }
  m.add_lin({{P[0], 1.0}}, Sense::Eq, 0.0);
  for (int i = 1; i <= N; ++i) {
    m.add_cond(ctx.valuation(c, i), 1, {{P[i], 1.0}}, Sense::Le, 0.0,
               "Preset_" + itos(k) + "_" + itos(i));
    m.add_cond(ctx.valuation(c, i), 0,
               {{P[i], 1.0}, {P[i - 1], -1.0}, {ctx.gamma(i), -1.0}, {ctx.gamma(i - 1), 1.0}},
               Sense::Ge, 0.0, "Pgrow_" + itos(k) + "_" + itos(i));
  }

  using D = MilpModel::Disjunct;
  for (int i = 1; i <= N; ++i) {
    // negative case: <ev>_i = 0 forces the child false on every interval
    // the window can touch (dual of the bounded-always positive case)
    for (int j = i; j <= N; ++j) {
      std::vector<D> ds;
      ds.push_back(D::lit(ctx.valuation(k, i), true));
      ds.push_back(D::ge({{ctx.gamma(j - 1), 1.0}, {ctx.gamma(i), -1.0}}, b));
      ds.push_back(D::ge({{ctx.gamma(i - 1), 1.0}, {ctx.gamma(j), -1.0}}, eps - a));
      ds.push_back(D::lit(ctx.valuation(c, j), false));
      m.add_disjunction(ds, "ev" + itos(k) + "_n_" + itos(i) + "_" + itos(j));
    }
    {
      std::vector<D> ds;
      ds.push_back(D::lit(ctx.valuation(k, i), true));
      ds.push_back(D::ge({{ctx.gamma(N), 1.0}, {ctx.gamma(i), -1.0}}, b));
      ds.push_back(D::lit(ctx.valuation(c, N), false));
      m.add_disjunction(ds, "ev" + itos(k) + "_n_" + itos(i) + "_end");
    }

    // positive case: <ev>_i = 1 needs a recent child-true interval within
    // reach, expressed through bounds on P
    for (int j = i; j <= N; ++j) {
      {
        std::vector<D> ds;
        ds.push_back(D::lit(ctx.valuation(k, i), false));
        ds.push_back(D::ge({{ctx.gamma(i - 1), 1.0}, {ctx.gamma(j), -1.0}}, -b));
        ds.push_back(D::ge({{ctx.gamma(j), 1.0}, {ctx.gamma(i), -1.0}}, b));
        ds.push_back(D::ge({{P[j], -1.0}}, a - b));
        m.add_disjunction(ds, "ev" + itos(k) + "_p1_" + itos(i) + "_" + itos(j));
      }
      {
        std::vector<D> ds;
        ds.push_back(D::lit(ctx.valuation(k, i), false));
        ds.push_back(D::ge({{ctx.gamma(j - 1), 1.0}, {ctx.gamma(i), -1.0}}, b + eps));
        ds.push_back(D::ge({{ctx.gamma(i), 1.0}, {ctx.gamma(j), -1.0}}, eps - b));
        ds.push_back(D::ge({{ctx.gamma(j), 1.0}, {ctx.gamma(i), -1.0}, {P[j], -1.0}}, a));
        m.add_disjunction(ds, "ev" + itos(k) + "_p2_" + itos(i) + "_" + itos(j));
      }
    }
    {
      std::vector<D> ds;
      ds.push_back(D::lit(ctx.valuation(k, i), false));
      ds.push_back(D::ge({{ctx.gamma(N), 1.0}, {ctx.gamma(i), -1.0}}, b));
      ds.push_back(D::ge({{P[N], -1.0}}, 0.0));
      ds.push_back(D::ge({{ctx.gamma(N), 1.0}, {ctx.gamma(i), -1.0}, {P[N], -1.0}}, a));
      m.add_disjunction(ds, "ev" + itos(k) + "_p3_" + itos(i));
    }
  }
}

void StlEncoder::encode_formula(EncodingContext& ctx) {
  for (const auto& sub : ctx.subformulas()) {
    if (sub->kind == NodeKind::Atom) {
      for (const auto& [v, c] : sub->pred.coeffs) {
        if (!ctx.has_trace_var(v))
          throw std::runtime_error("formula references variable '" + v +
                                   "' absent from the system model");
      }
    }
  }
  encode_atomics(ctx);
  encode_boolean(ctx);
  encode_unbounded(ctx);
  for (const auto& sub : ctx.subformulas()) {
    if (sub->window.unbounded()) continue;
    if (sub->kind == NodeKind::Always) encode_bounded_always(ctx, sub);
    else if (sub->kind == NodeKind::Eventually) encode_bounded_eventually(ctx, sub);
  }
  // fulfilling constraint
  ctx.model().fix_binary(ctx.valuation(ctx.sub_index(ctx.formula()), 1), 1);
}

}  // namespace stlts
