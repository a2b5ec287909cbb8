#include "stlts/model_encoders.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace stlts {

namespace {

std::string itos(int i) { return std::to_string(i); }

Box parse_box(const nlohmann::json& j) {
  Box box;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& arr = it.value();
    if (!arr.is_array() || arr.size() != 2)
      throw std::runtime_error("box entry for '" + it.key() + "' must be [lo, hi]");
    box[it.key()] = {arr[0].get<double>(), arr[1].get<double>()};
  }
  return box;
}

RhaTransition parse_transition(const nlohmann::json& j) {
  RhaTransition t;
  t.from = j.at("from").get<std::string>();
  t.to = j.at("to").get<std::string>();
  if (j.contains("guard")) t.guard = parse_box(j.at("guard"));
  if (j.contains("update"))
    for (const auto& u : j.at("update")) t.update.push_back(u.get<std::string>());
  if (j.contains("post")) t.post = parse_box(j.at("post"));
  return t;
}

}  // namespace

std::vector<std::string> SystemModel::variable_names() const {
  std::vector<std::string> names;
  switch (kind) {
    case ModelKind::Rha:
      for (const auto& [v, _] : rha.variables) names.push_back(v);
      break;
    case ModelKind::DoubleIntegrator:
      for (const auto& a : di.agents) {
        names.push_back(a.position);
        names.push_back(a.velocity);
        names.push_back(a.acceleration);
      }
      break;
    case ModelKind::ClosedForm:
      for (const auto& [v, _] : cf.state_vars) names.push_back(v);
      for (const auto& [v, _] : cf.input_vars) names.push_back(v);
      break;
    case ModelKind::Identity:
      for (const auto& [v, _] : identity.variables) names.push_back(v);
      break;
  }
  return names;
}

void SystemModel::validate() const {
  if (!(horizon > 0)) throw std::runtime_error("model horizon must be positive");
  if (kind == ModelKind::Rha) {
    if (rha.modes.empty()) throw std::runtime_error("RHA needs at least one mode");
    std::set<std::string> mode_names;
    for (const auto& m : rha.modes) {
      if (!mode_names.insert(m.name).second)
        throw std::runtime_error("duplicate mode '" + m.name + "'");
      for (const auto& [v, _] : rha.variables)
        if (!m.flow.count(v))
          throw std::runtime_error("mode '" + m.name + "' missing flow for '" + v + "'");
    }
    auto check_box = [&](const Box& b, const std::string& what) {
      for (const auto& [v, iv] : b) {
        if (!rha.variables.count(v))
          throw std::runtime_error(what + " mentions unknown variable '" + v + "'");
        auto [lo, hi] = rha.variables.at(v);
        if (iv.first < lo - 1e-9 || iv.second > hi + 1e-9)
          throw std::runtime_error(what + " box for '" + v + "' exceeds variable bounds");
      }
    };
    for (const auto& m : rha.modes) check_box(m.invariant, "invariant of " + m.name);
    for (const auto& t : rha.transitions) {
      if (!mode_names.count(t.from) || !mode_names.count(t.to))
        throw std::runtime_error("transition references unknown mode");
      check_box(t.guard, "guard");
      check_box(t.post, "post");
      for (const auto& u : t.update)
        if (!t.post.count(u))
          throw std::runtime_error("updated variable '" + u + "' needs a post box");
    }
    for (const auto& name : rha.initial_modes)
      if (!mode_names.count(name))
        throw std::runtime_error("unknown initial mode '" + name + "'");
    check_box(rha.init, "initial");
  }
  if (kind == ModelKind::ClosedForm) {
    if (cf.modes.empty()) throw std::runtime_error("model needs at least one mode");
    if (!(cf.dt > 0)) throw std::runtime_error("sampling interval must be positive");
    size_t need = static_cast<size_t>(std::ceil(horizon / cf.dt)) + 1;
    for (const auto& m : cf.modes)
      if (m.sampled_maps.size() < need)
        throw std::runtime_error("mode '" + m.name +
                                 "' sample table does not cover the horizon");
  }
}

SystemModel load_model_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SystemModel m;
  std::string kind = j.at("kind").get<std::string>();
  m.horizon = j.value("horizon", 0.0);
  if (kind == "rha") {
    m.kind = ModelKind::Rha;
    m.rha.variables = parse_box(j.at("variables"));
    for (const auto& jm : j.at("modes")) {
      RhaMode mode;
      mode.name = jm.at("name").get<std::string>();
      mode.flow = parse_box(jm.at("flow"));
      if (jm.contains("invariant")) mode.invariant = parse_box(jm.at("invariant"));
      m.rha.modes.push_back(std::move(mode));
    }
    if (j.contains("transitions"))
      for (const auto& jt : j.at("transitions"))
        m.rha.transitions.push_back(parse_transition(jt));
    if (j.contains("init")) {
      const auto& ji = j.at("init");
      if (ji.contains("modes"))
        for (const auto& s : ji.at("modes"))
          m.rha.initial_modes.push_back(s.get<std::string>());
      if (ji.contains("box")) m.rha.init = parse_box(ji.at("box"));
    }
  } else if (kind == "double_integrator") {
    m.kind = ModelKind::DoubleIntegrator;
    for (const auto& ja : j.at("agents")) {
      DoubleIntegratorAgent a;
      a.position = ja.at("position").get<std::string>();
      a.velocity = ja.at("velocity").get<std::string>();
      a.acceleration = ja.at("acceleration").get<std::string>();
      auto pair_of = [](const nlohmann::json& x) {
        return std::make_pair(x.at(0).get<double>(), x.at(1).get<double>());
      };
      a.position_bounds = pair_of(ja.at("position_bounds"));
      a.velocity_bounds = pair_of(ja.at("velocity_bounds"));
      a.acceleration_bounds = pair_of(ja.at("acceleration_bounds"));
      a.initial_position = ja.contains("initial_position")
                               ? pair_of(ja.at("initial_position"))
                               : a.position_bounds;
      a.initial_velocity = ja.contains("initial_velocity")
                               ? pair_of(ja.at("initial_velocity"))
                               : a.velocity_bounds;
      m.di.agents.push_back(std::move(a));
    }
  } else if (kind == "closed_form") {
    m.kind = ModelKind::ClosedForm;
    m.cf.state_vars = parse_box(j.at("state_vars"));
    if (j.contains("input_vars")) m.cf.input_vars = parse_box(j.at("input_vars"));
    m.cf.dt = j.at("dt").get<double>();
    for (const auto& jm : j.at("modes")) {
      ClosedFormMode mode;
      mode.name = jm.at("name").get<std::string>();
      for (const auto& jk : jm.at("samples")) {
        std::map<std::string, ClosedFormMode::AffineRow> row;
        for (auto it = jk.begin(); it != jk.end(); ++it) {
          ClosedFormMode::AffineRow r;
          const auto& jr = it.value();
          r.constant = jr.value("constant", 0.0);
          if (jr.contains("inputs"))
            for (auto i2 = jr.at("inputs").begin(); i2 != jr.at("inputs").end(); ++i2)
              r.input_coeffs[i2.key()] = i2.value().get<double>();
          if (jr.contains("entry"))
            for (auto i2 = jr.at("entry").begin(); i2 != jr.at("entry").end(); ++i2)
              r.entry_coeffs[i2.key()] = i2.value().get<double>();
          row[it.key()] = std::move(r);
        }
        mode.sampled_maps.push_back(std::move(row));
      }
      m.cf.modes.push_back(std::move(mode));
    }
    if (j.contains("transitions"))
      for (const auto& jt : j.at("transitions"))
        m.cf.transitions.push_back(parse_transition(jt));
    if (j.contains("init")) {
      const auto& ji = j.at("init");
      if (ji.contains("modes"))
        for (const auto& s : ji.at("modes"))
          m.cf.initial_modes.push_back(s.get<std::string>());
      if (ji.contains("box")) m.cf.init = parse_box(ji.at("box"));
    }
  } else if (kind == "identity") {
    m.kind = ModelKind::Identity;
    m.identity.variables = parse_box(j.at("variables"));
  } else {
    throw std::runtime_error("unknown model kind '" + kind + "'");
  }
  m.validate();
  return m;
}

SystemModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return load_model_json(os.str());
}

// ---------------------------------------------------------------------------
// Encoders

ModelEncodeInfo ModelEncoder::encode(const SystemModel& m, EncodingContext& ctx,
                                     int beta) {
  switch (m.kind) {
    case ModelKind::Rha: return encode_rha(m.rha, ctx);
    case ModelKind::DoubleIntegrator: return encode_double_integrator(m.di, ctx, beta);
    case ModelKind::ClosedForm: return encode_closed_form(m.cf, ctx, beta);
    case ModelKind::Identity: return encode_identity(m.identity, ctx);
  }
  throw std::logic_error("unreachable");
}

ModelEncodeInfo ModelEncoder::encode_identity(const IdentityModel& m,
                                              EncodingContext& ctx) {
  for (const auto& [v, b] : m.variables) ctx.register_trace_var(v, b.first, b.second);
  return {};
}

namespace {

// box condition at a specific knot-state, guarded by a binary
void guarded_box(EncodingContext& ctx, VarId guard, const Box& box,
                 const std::map<std::string, std::vector<VarId>>& state, int i,
                 const std::string& stem) {
  MilpModel& m = ctx.model();
  for (const auto& [v, iv] : box) {
    VarId x = state.at(v).at(i);
    m.add_cond(guard, 1, {{x, 1.0}}, Sense::Ge, iv.first, stem + "_" + v + "_lo");
    m.add_cond(guard, 1, {{x, 1.0}}, Sense::Le, iv.second, stem + "_" + v + "_hi");
  }
}

}  // namespace

ModelEncodeInfo ModelEncoder::encode_rha(const RectangularHybridAutomaton& h,
                                         EncodingContext& ctx) {
  MilpModel& m = ctx.model();
  int N = ctx.n();
  ModelEncodeInfo info;

  for (const auto& [v, b] : h.variables) ctx.register_trace_var(v, b.first, b.second);

  // variables reset by some jump get pre-knot copies at interior knots
  std::set<std::string> updated;
  for (const auto& t : h.transitions)
    for (const auto& u : t.update) updated.insert(u);

  // state access: post values are the shared trace variables; the value at
  // the end of interval i (before any jump at knot i) is the pre copy for
  // updated variables at interior knots
  std::map<std::string, std::vector<VarId>> post_state, pre_state;
  for (const auto& [v, b] : h.variables) {
    std::vector<VarId> post(N + 1), pre(N + 1);
    for (int i = 0; i <= N; ++i) {
      post[i] = ctx.trace_var(v, i);
      pre[i] = post[i];
    }
    if (updated.count(v)) {
      for (int i = 1; i <= N - 1; ++i) {
        pre[i] = m.add_continuous("xpre_" + itos(i) + "_" + v, b.first, b.second);
        ctx.note_symbol("xpre_" + itos(i) + "_" + v,
                        v + "(gamma_" + itos(i) + "-) before jump");
      }
    }
    post_state[v] = std::move(post);
    pre_state[v] = std::move(pre);
  }

  int L = static_cast<int>(h.modes.size());
  std::vector<std::vector<VarId>> mode(N + 1);  // mode[i][l], i in 1..N
  for (int i = 1; i <= N; ++i) {
    mode[i].resize(L);
    std::vector<std::pair<VarId, double>> sum;
    for (int l = 0; l < L; ++l) {
      std::string name = "mode_" + itos(i) + "_" + itos(l);
      mode[i][l] = m.add_binary(name);
      info.mode_var_names.push_back(name);
      ctx.note_symbol(name, "interval " + itos(i) + " in mode " + h.modes[l].name);
      sum.push_back({mode[i][l], 1.0});
    }
    m.add_lin(std::move(sum), Sense::Eq, 1.0, "one_mode_" + itos(i));
  }

  // flow and invariants per interval
  for (int i = 1; i <= N; ++i) {
    VarId d = ctx.duration(i);
    for (int l = 0; l < L; ++l) {
      const RhaMode& md = h.modes[l];
      std::string stem = "flow_" + itos(i) + "_" + itos(l);
      for (const auto& [v, fl] : md.flow) {
        VarId x_end = pre_state.at(v).at(i);
        VarId x_start = post_state.at(v).at(i - 1);
        // a_x * d <= x_end - x_start <= b_x * d
        m.add_cond(mode[i][l], 1,
                   {{x_end, 1.0}, {x_start, -1.0}, {d, -fl.first}}, Sense::Ge, 0.0,
                   stem + "_" + v + "_lo");
        m.add_cond(mode[i][l], 1,
                   {{x_end, 1.0}, {x_start, -1.0}, {d, -fl.second}}, Sense::Le, 0.0,
                   stem + "_" + v + "_hi");
      }
      // box invariants hold at both endpoints; linear motion keeps them
      // inside
      guarded_box(ctx, mode[i][l], md.invariant, post_state, i - 1,
                  "inv_s_" + itos(i) + "_" + itos(l));
      guarded_box(ctx, mode[i][l], md.invariant, pre_state, i,
                  "inv_e_" + itos(i) + "_" + itos(l));
    }
  }

  // knot switching: stay in the same mode or take a transition
  int E = static_cast<int>(h.transitions.size());
  auto mode_index = [&](const std::string& name) {
    for (int l = 0; l < L; ++l)
      if (h.modes[l].name == name) return l;
    throw std::runtime_error("unknown mode '" + name + "'");
  };
  for (int i = 1; i <= N - 1; ++i) {
    std::vector<std::pair<VarId, double>> pick;
    std::vector<VarId> stay(L);
    for (int l = 0; l < L; ++l) {
      stay[l] = m.add_binary("stay_" + itos(i) + "_" + itos(l));
      pick.push_back({stay[l], 1.0});
      m.add_lin({{stay[l], 1.0}, {mode[i][l], -1.0}}, Sense::Le, 0.0);
      m.add_lin({{stay[l], 1.0}, {mode[i + 1][l], -1.0}}, Sense::Le, 0.0);
    }
    std::vector<std::vector<VarId>> trans_by_var;  // for update detection
    std::vector<VarId> trans(E, -1);
    for (int e = 0; e < E; ++e) {
      const RhaTransition& tr = h.transitions[e];
      trans[e] = m.add_binary("jump_" + itos(i) + "_" + itos(e));
      pick.push_back({trans[e], 1.0});
      int from = mode_index(tr.from), to = mode_index(tr.to);
      m.add_lin({{trans[e], 1.0}, {mode[i][from], -1.0}}, Sense::Le, 0.0);
      m.add_lin({{trans[e], 1.0}, {mode[i + 1][to], -1.0}}, Sense::Le, 0.0);
      guarded_box(ctx, trans[e], tr.guard, pre_state, i, "grd_" + itos(i) + "_" + itos(e));
      guarded_box(ctx, trans[e], tr.post, post_state, i, "post_" + itos(i) + "_" + itos(e));
    }
    m.add_lin(std::move(pick), Sense::Eq, 1.0, "switch_" + itos(i));

    // pre == post at knot i unless a jump resetting the variable fires
    for (const auto& v : updated) {
      VarId pre = pre_state.at(v).at(i);
      VarId post = post_state.at(v).at(i);
      std::vector<VarId> resetting;
      for (int e = 0; e < E; ++e) {
        const RhaTransition& tr = h.transitions[e];
        for (const auto& u : tr.update)
          if (u == v) resetting.push_back(trans[e]);
      }
      if (resetting.empty()) {
        m.add_lin({{pre, 1.0}, {post, -1.0}}, Sense::Eq, 0.0);
        continue;
      }
      VarId any = m.add_binary("upd_" + itos(i) + "_" + v);
      m.bool_or(any, resetting);
      m.add_cond(any, 0, {{pre, 1.0}, {post, -1.0}}, Sense::Ge, 0.0,
                 "glue_lo_" + itos(i) + "_" + v);
      m.add_cond(any, 0, {{pre, 1.0}, {post, -1.0}}, Sense::Le, 0.0,
                 "glue_hi_" + itos(i) + "_" + v);
    }
  }

  // initial state and modes
  for (const auto& [v, iv] : h.init) {
    m.add_lin({{ctx.trace_var(v, 0), 1.0}}, Sense::Ge, iv.first, "init_" + v + "_lo");
    m.add_lin({{ctx.trace_var(v, 0), 1.0}}, Sense::Le, iv.second, "init_" + v + "_hi");
  }
  if (!h.initial_modes.empty()) {
    std::set<std::string> allowed(h.initial_modes.begin(), h.initial_modes.end());
    for (int l = 0; l < L; ++l)
      if (!allowed.count(h.modes[l].name)) m.fix_binary(mode[1][l], 0);
  }
  return info;
}

namespace {

double rational_gcd(double a, double b) {
  a = std::abs(a);
  b = std::abs(b);
  while (b > 1e-7) {
    double r = std::fmod(a, b);
    if (r > b - 1e-9) r = 0.0;  // fmod round-off at exact multiples
    a = b;
    b = r;
  }
  return a;
}

// Grid step for the binary expansion of interval durations. Window
// endpoints must be expressible as sums of durations, or patterns that
// align a knot with a window edge become artificially infeasible; so the
// step divides the gcd of the horizon and all finite window bounds when
// the bit budget allows, and falls back to T/(2^beta - 1) otherwise.
double duration_grid_step(const EncodingContext& ctx, int beta) {
  double T = ctx.horizon();
  double g = T;
  for (const auto& sub : ctx.subformulas()) {
    if (!sub->is_temporal()) continue;
    for (double b : {sub->window.lo, sub->window.hi}) {
      if (b > 1e-7 && !std::isinf(b)) g = rational_gcd(g, b);
    }
  }
  // aim a bit below the nominal beta resolution so the quantization loss
  // at atom crossings stays well inside the beta-derived error bound; the
  // bit count per interval grows accordingly (log2(T/step))
  double target = T / std::pow(2.0, beta + 2);
  if (g >= target * (1.0 - 1e-9)) {
    int m = static_cast<int>(std::ceil(std::log2(g / target) - 1e-9));
    return g / std::pow(2.0, m);
  }
  return T / (std::pow(2.0, beta) - 1.0);
}

}  // namespace

ModelEncodeInfo ModelEncoder::encode_double_integrator(const DoubleIntegratorModel& mdl,
                                                       EncodingContext& ctx, int beta) {
  MilpModel& m = ctx.model();
  int N = ctx.n();
  double T = ctx.horizon();
  if (beta < 2 || beta > 24) throw std::runtime_error("beta out of range");

  for (const auto& a : mdl.agents) {
    ctx.register_trace_var(a.position, a.position_bounds.first, a.position_bounds.second);
    ctx.register_trace_var(a.velocity, a.velocity_bounds.first, a.velocity_bounds.second);
    ctx.register_trace_var(a.acceleration, a.acceleration_bounds.first,
                           a.acceleration_bounds.second);
    if (std::isinf(a.velocity_bounds.first) || std::isinf(a.velocity_bounds.second))
      throw std::runtime_error("velocity bounds must be finite");
  }

  // shared binary expansion of the interval durations:
  //   d_i = step * sum_q 2^q u_{i,q}
  double step = duration_grid_step(ctx, beta);
  int nbits = std::max(beta, static_cast<int>(std::ceil(std::log2(T / step + 1.0))));
  std::vector<std::vector<VarId>> bits(N + 1);
  for (int i = 1; i <= N; ++i) {
    VarId d = ctx.duration(i);
    std::vector<std::pair<VarId, double>> terms{{d, 1.0}};
    bits[i].resize(nbits);
    for (int q = 0; q < nbits; ++q) {
      bits[i][q] = m.add_binary("tb_" + itos(i) + "_" + itos(q));
      terms.push_back({bits[i][q], -step * std::pow(2.0, q)});
    }
    m.add_lin(std::move(terms), Sense::Eq, 0.0, "dgrid_" + itos(i));
  }

  // product helper: y = u * w for a binary u and a bounded continuous w
  auto bit_product = [&](VarId u, VarId w, double wlo, double whi,
                         const std::string& name) {
    VarId y = m.add_continuous(name, std::min(0.0, wlo), std::max(0.0, whi));
    m.add_lin({{y, 1.0}, {u, -whi}}, Sense::Le, 0.0);
    m.add_lin({{y, 1.0}, {u, -wlo}}, Sense::Ge, 0.0);
    m.add_lin({{y, 1.0}, {w, -1.0}, {u, -wlo}}, Sense::Le, -wlo);
    m.add_lin({{y, 1.0}, {w, -1.0}, {u, -whi}}, Sense::Ge, -whi);
    return y;
  };

  int agent_idx = 0;
  for (const auto& a : mdl.agents) {
    const auto [vlo, vhi] = a.velocity_bounds;
    const auto [alo, ahi] = a.acceleration_bounds;
    std::string ag = itos(agent_idx++);

    // initial boxes at knot 0
    m.add_lin({{ctx.trace_var(a.position, 0), 1.0}}, Sense::Ge, a.initial_position.first);
    m.add_lin({{ctx.trace_var(a.position, 0), 1.0}}, Sense::Le, a.initial_position.second);
    m.add_lin({{ctx.trace_var(a.velocity, 0), 1.0}}, Sense::Ge, a.initial_velocity.first);
    m.add_lin({{ctx.trace_var(a.velocity, 0), 1.0}}, Sense::Le, a.initial_velocity.second);

    // knot 0 of the acceleration repeats interval 1's constant
    m.add_lin({{ctx.trace_var(a.acceleration, 0), 1.0},
               {ctx.trace_var(a.acceleration, 1), -1.0}},
              Sense::Eq, 0.0, "acc0_" + ag);

    for (int i = 1; i <= N; ++i) {
      VarId acc = ctx.trace_var(a.acceleration, i);  // constant on interval i
      VarId v0 = ctx.trace_var(a.velocity, i - 1);
      VarId v1 = ctx.trace_var(a.velocity, i);
      VarId x0 = ctx.trace_var(a.position, i - 1);
      VarId x1 = ctx.trace_var(a.position, i);

      // w = (v0 + v1)/2, the trapezoid mean velocity
      VarId w = m.add_continuous("vmid_" + ag + "_" + itos(i), vlo, vhi);
      m.add_lin({{w, 2.0}, {v0, -1.0}, {v1, -1.0}}, Sense::Eq, 0.0);

      // v1 = v0 + step * sum 2^q (u_q * acc)
      std::vector<std::pair<VarId, double>> vterms{{v1, 1.0}, {v0, -1.0}};
      std::vector<std::pair<VarId, double>> xterms{{x1, 1.0}, {x0, -1.0}};
      for (int q = 0; q < nbits; ++q) {
        VarId ya = bit_product(bits[i][q], acc, alo, ahi,
                               "ya_" + ag + "_" + itos(i) + "_" + itos(q));
        VarId yw = bit_product(bits[i][q], w, vlo, vhi,
                               "yw_" + ag + "_" + itos(i) + "_" + itos(q));
        double c = step * std::pow(2.0, q);
        vterms.push_back({ya, -c});
        xterms.push_back({yw, -c});
      }
      m.add_lin(std::move(vterms), Sense::Eq, 0.0, "vtrap_" + ag + "_" + itos(i));
      m.add_lin(std::move(xterms), Sense::Eq, 0.0, "xtrap_" + ag + "_" + itos(i));
    }
  }
  return {};
}

ModelEncodeInfo ModelEncoder::encode_closed_form(const ClosedFormHA& h,
                                                 EncodingContext& ctx, int beta) {
  MilpModel& m = ctx.model();
  int N = ctx.n();
  double T = ctx.horizon();
  ModelEncodeInfo info;

  for (const auto& [v, b] : h.state_vars) ctx.register_trace_var(v, b.first, b.second);
  for (const auto& [v, b] : h.input_vars) ctx.register_trace_var(v, b.first, b.second);

  int L = static_cast<int>(h.modes.size());
  int K = static_cast<int>(std::ceil(T / h.dt + 1e-9));  // segments per table

  std::vector<std::vector<VarId>> mode(N + 1);
  for (int i = 1; i <= N; ++i) {
    mode[i].resize(L);
    std::vector<std::pair<VarId, double>> sum;
    for (int l = 0; l < L; ++l) {
      std::string name = "mode_" + itos(i) + "_" + itos(l);
      mode[i][l] = m.add_binary(name);
      info.mode_var_names.push_back(name);
      sum.push_back({mode[i][l], 1.0});
    }
    m.add_lin(std::move(sum), Sense::Eq, 1.0, "one_mode_" + itos(i));
  }

  // switching binaries: one stay or one transition per interior knot
  int E = static_cast<int>(h.transitions.size());
  auto mode_index = [&](const std::string& name) {
    for (int l = 0; l < L; ++l)
      if (h.modes[l].name == name) return l;
    throw std::runtime_error("unknown mode '" + name + "'");
  };
  std::vector<VarId> switch_any(N, -1);  // at knot i: 1 iff a jump fires
  for (int i = 1; i <= N - 1; ++i) {
    std::vector<std::pair<VarId, double>> pick;
    std::vector<VarId> jumps;
    for (int l = 0; l < L; ++l) {
      VarId stay = m.add_binary("stay_" + itos(i) + "_" + itos(l));
      pick.push_back({stay, 1.0});
      m.add_lin({{stay, 1.0}, {mode[i][l], -1.0}}, Sense::Le, 0.0);
      m.add_lin({{stay, 1.0}, {mode[i + 1][l], -1.0}}, Sense::Le, 0.0);
    }
    for (int e = 0; e < E; ++e) {
      const RhaTransition& tr = h.transitions[e];
      VarId t = m.add_binary("jump_" + itos(i) + "_" + itos(e));
      jumps.push_back(t);
      pick.push_back({t, 1.0});
      m.add_lin({{t, 1.0}, {mode[i][mode_index(tr.from)], -1.0}}, Sense::Le, 0.0);
      m.add_lin({{t, 1.0}, {mode[i + 1][mode_index(tr.to)], -1.0}}, Sense::Le, 0.0);
      for (const auto& [v, iv] : tr.guard) {
        m.add_cond(t, 1, {{ctx.trace_var(v, i), 1.0}}, Sense::Ge, iv.first);
        m.add_cond(t, 1, {{ctx.trace_var(v, i), 1.0}}, Sense::Le, iv.second);
      }
    }
    m.add_lin(std::move(pick), Sense::Eq, 1.0, "switch_" + itos(i));
    if (jumps.empty()) {
      switch_any[i] = -1;
    } else {
      switch_any[i] = m.add_binary("jumped_" + itos(i));
      m.bool_or(switch_any[i], jumps);
    }
  }

  // elapsed time within the current mode and the mode-entry state
  std::vector<VarId> e_start(N + 1), e_end(N + 1);
  std::map<std::string, std::vector<VarId>> entry;  // x0 per interval
  for (const auto& [v, b] : h.state_vars) entry[v].resize(N + 1, -1);
  for (int i = 1; i <= N; ++i) {
    e_start[i] = m.add_continuous("es_" + itos(i), 0.0, T);
    e_end[i] = m.add_continuous("ee_" + itos(i), 0.0, T);
    m.add_lin({{e_end[i], 1.0}, {e_start[i], -1.0}, {ctx.duration(i), -1.0}},
              Sense::Eq, 0.0, "elapsed_" + itos(i));
    for (auto& [v, vec] : entry) {
      auto b = h.state_vars.at(v);
      vec[i] = m.add_continuous("x0_" + itos(i) + "_" + v, b.first, b.second);
    }
  }
  m.add_lin({{e_start[1], 1.0}}, Sense::Eq, 0.0);
  for (auto& [v, vec] : entry)
    m.add_lin({{vec[1], 1.0}, {ctx.trace_var(v, 0), -1.0}}, Sense::Eq, 0.0);
  for (int i = 1; i <= N - 1; ++i) {
    VarId sw = switch_any[i];
    auto link = [&](VarId next, VarId cont, VarId reset_to, bool reset_zero) {
      if (sw < 0) {
        // no transitions exist: always continue
        m.add_lin({{next, 1.0}, {cont, -1.0}}, Sense::Eq, 0.0);
        return;
      }
      m.add_cond(sw, 0, {{next, 1.0}, {cont, -1.0}}, Sense::Ge, 0.0);
      m.add_cond(sw, 0, {{next, 1.0}, {cont, -1.0}}, Sense::Le, 0.0);
      if (reset_zero) {
        m.add_cond(sw, 1, {{next, 1.0}}, Sense::Le, 0.0);
      } else {
        m.add_cond(sw, 1, {{next, 1.0}, {reset_to, -1.0}}, Sense::Ge, 0.0);
        m.add_cond(sw, 1, {{next, 1.0}, {reset_to, -1.0}}, Sense::Le, 0.0);
      }
    };
    link(e_start[i + 1], e_end[i], -1, /*reset_zero=*/true);
    for (auto& [v, vec] : entry)
      link(vec[i + 1], vec[i], ctx.trace_var(v, i), /*reset_zero=*/false);
    // inputs stay constant while the mode persists
    for (const auto& [v, b] : h.input_vars) {
      if (sw < 0) {
        m.add_lin({{ctx.trace_var(v, i + 1), 1.0}, {ctx.trace_var(v, i), -1.0}},
                  Sense::Eq, 0.0);
      } else {
        m.add_cond(sw, 0, {{ctx.trace_var(v, i + 1), 1.0}, {ctx.trace_var(v, i), -1.0}},
                   Sense::Ge, 0.0);
        m.add_cond(sw, 0, {{ctx.trace_var(v, i + 1), 1.0}, {ctx.trace_var(v, i), -1.0}},
                   Sense::Le, 0.0);
      }
    }
  }

  // segment selection: sel_{i,s} = 1 picks s*dt <= e_end_i <= (s+1)*dt.
  // lambda_i in [0,1] is the within-segment fraction, binary-expanded on
  // the grid k/2^beta with beta+1 bits so that both 0 and 1 are exact
  double lam_scale = std::pow(2.0, beta);
  for (int i = 1; i <= N; ++i) {
    std::vector<VarId> sel(K);
    std::vector<std::pair<VarId, double>> one;
    std::vector<std::pair<VarId, double>> lam_def{{e_end[i], 1.0}};
    for (int s = 0; s < K; ++s) {
      sel[s] = m.add_binary("seg_" + itos(i) + "_" + itos(s));
      one.push_back({sel[s], 1.0});
      m.add_cond(sel[s], 1, {{e_end[i], 1.0}}, Sense::Ge, s * h.dt);
      m.add_cond(sel[s], 1, {{e_end[i], 1.0}}, Sense::Le, (s + 1) * h.dt);
      lam_def.push_back({sel[s], -s * h.dt});
    }
    m.add_lin(std::move(one), Sense::Eq, 1.0, "one_seg_" + itos(i));

    VarId lam = m.add_continuous("lam_" + itos(i), 0.0, 1.0);
    lam_def.push_back({lam, -h.dt});
    m.add_lin(std::move(lam_def), Sense::Eq, 0.0, "lam_def_" + itos(i));

    std::vector<VarId> lam_bits(beta + 1);
    std::vector<std::pair<VarId, double>> expand{{lam, 1.0}};
    for (int q = 0; q <= beta; ++q) {
      lam_bits[q] = m.add_binary("lb_" + itos(i) + "_" + itos(q));
      expand.push_back({lam_bits[q], -std::pow(2.0, q) / lam_scale});
    }
    m.add_lin(std::move(expand), Sense::Eq, 0.0, "lam_grid_" + itos(i));

    // per state variable: interpolated value under the active (mode, seg)
    for (const auto& [v, bounds] : h.state_vars) {
      // diff_{i,v} = f(s+1) - f(s) applied to (inputs, entry state); its
      // range is bounded conservatively from the variable bounds
      double dlo = 0.0, dhi = 0.0;
      for (const auto& md : h.modes) {
        for (int s = 0; s < K; ++s) {
          const auto& r0 = md.sampled_maps[s].at(v);
          const auto& r1 = md.sampled_maps[s + 1].at(v);
          double lo = r1.constant - r0.constant, hi = lo;
          auto extend = [&](const std::map<std::string, double>& c1,
                            const std::map<std::string, double>& c0, const Box& bx) {
            std::set<std::string> keys;
            for (auto& [k, _] : c1) keys.insert(k);
            for (auto& [k, _] : c0) keys.insert(k);
            for (const auto& k : keys) {
              double c = (c1.count(k) ? c1.at(k) : 0.0) - (c0.count(k) ? c0.at(k) : 0.0);
              auto b = bx.at(k);
              lo += std::min(c * b.first, c * b.second);
              hi += std::max(c * b.first, c * b.second);
            }
          };
          extend(r1.input_coeffs, r0.input_coeffs, h.input_vars);
          extend(r1.entry_coeffs, r0.entry_coeffs, h.state_vars);
          dlo = std::min(dlo, lo);
          dhi = std::max(dhi, hi);
        }
      }
      VarId diff = m.add_continuous("cfd_" + itos(i) + "_" + v, dlo, dhi);

      // prod = lam * diff through the bits
      std::vector<std::pair<VarId, double>> prod_terms;
      for (int q = 0; q <= beta; ++q) {
        VarId y = m.add_continuous("cfy_" + itos(i) + "_" + v + "_" + itos(q),
                                   std::min(0.0, dlo), std::max(0.0, dhi));
        m.add_lin({{y, 1.0}, {lam_bits[q], -dhi}}, Sense::Le, 0.0);
        m.add_lin({{y, 1.0}, {lam_bits[q], -dlo}}, Sense::Ge, 0.0);
        m.add_lin({{y, 1.0}, {diff, -1.0}, {lam_bits[q], -dlo}}, Sense::Le, -dlo);
        m.add_lin({{y, 1.0}, {diff, -1.0}, {lam_bits[q], -dhi}}, Sense::Ge, -dhi);
        prod_terms.push_back({y, std::pow(2.0, q) / lam_scale});
      }

      for (int l = 0; l < L; ++l) {
        for (int s = 0; s < K; ++s) {
          VarId g = m.add_binary("act_" + itos(i) + "_" + itos(l) + "_" + itos(s) +
                                 "_" + v);
          m.bool_and(g, {mode[i][l], sel[s]});
          const auto& r0 = h.modes[l].sampled_maps[s].at(v);
          const auto& r1 = h.modes[l].sampled_maps[s + 1].at(v);
          // diff = (r1 - r0)(inputs, entry)
          std::vector<std::pair<VarId, double>> dterms{{diff, 1.0}};
          double dconst = r1.constant - r0.constant;
          std::set<std::string> keys;
          for (auto& [k, _] : r1.input_coeffs) keys.insert(k);
          for (auto& [k, _] : r0.input_coeffs) keys.insert(k);
          for (const auto& k : keys) {
            double c = (r1.input_coeffs.count(k) ? r1.input_coeffs.at(k) : 0.0) -
                       (r0.input_coeffs.count(k) ? r0.input_coeffs.at(k) : 0.0);
            if (c != 0.0) dterms.push_back({ctx.trace_var(k, i), -c});
          }
          keys.clear();
          for (auto& [k, _] : r1.entry_coeffs) keys.insert(k);
          for (auto& [k, _] : r0.entry_coeffs) keys.insert(k);
          for (const auto& k : keys) {
            double c = (r1.entry_coeffs.count(k) ? r1.entry_coeffs.at(k) : 0.0) -
                       (r0.entry_coeffs.count(k) ? r0.entry_coeffs.at(k) : 0.0);
            if (c != 0.0) dterms.push_back({entry.at(k).at(i), -c});
          }
          m.add_cond(g, 1, dterms, Sense::Ge, dconst);
          m.add_cond(g, 1, dterms, Sense::Le, dconst);

          // x_{i,v} = r0(inputs, entry) + prod
          std::vector<std::pair<VarId, double>> xterms{{ctx.trace_var(v, i), 1.0}};
          for (const auto& [k, c] : r0.input_coeffs)
            if (c != 0.0) xterms.push_back({ctx.trace_var(k, i), -c});
          for (const auto& [k, c] : r0.entry_coeffs)
            if (c != 0.0) xterms.push_back({entry.at(k).at(i), -c});
          for (const auto& [y, c] : prod_terms) xterms.push_back({y, -c});
          m.add_cond(g, 1, xterms, Sense::Ge, r0.constant);
          m.add_cond(g, 1, xterms, Sense::Le, r0.constant);
        }
      }
    }
  }

  // initial state box and initial modes
  for (const auto& [v, iv] : h.init) {
    m.add_lin({{ctx.trace_var(v, 0), 1.0}}, Sense::Ge, iv.first);
    m.add_lin({{ctx.trace_var(v, 0), 1.0}}, Sense::Le, iv.second);
  }
  if (!h.initial_modes.empty()) {
    std::set<std::string> allowed(h.initial_modes.begin(), h.initial_modes.end());
    for (int l = 0; l < L; ++l)
      if (!allowed.count(h.modes[l].name)) m.fix_binary(mode[1][l], 0);
  }
  return info;
}

}  // namespace stlts
