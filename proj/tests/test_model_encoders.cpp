#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "stlts/stl_encoder.hpp"
#include "test_support.hpp"

using namespace stlts;
using namespace stlts::test;

namespace {

EncodingParams params(int n, double T) {
  EncodingParams p;
  p.n_intervals = n;
  p.horizon = T;
  p.delta = 0.1;
  p.epsilon = 1e-4;
  return p;
}

SolveResult run(EncodingContext& ctx, double limit = 60) {
  SolverConfig cfg;
  cfg.time_limit = limit;
  return ctx.model().solve(cfg);
}

double at(const std::map<std::string, double>& asg, const std::string& k) {
  return asg.at(k);
}

}  // namespace

TEST_CASE("model json loading and validation") {
  SystemModel nav = load_model_file(benchmarks_dir() + "/nav.json");
  CHECK(nav.kind == ModelKind::Rha);
  CHECK(nav.rha.modes.size() == 4);
  CHECK(nav.horizon == 40.0);

  SystemModel rnc = load_model_file(benchmarks_dir() + "/rnc.json");
  CHECK(rnc.kind == ModelKind::DoubleIntegrator);
  CHECK(rnc.di.agents.size() == 2);

  CHECK_THROWS(load_model_json("{\"kind\":\"bogus\"}"));
  CHECK_THROWS(load_model_json(R"({"kind":"rha","horizon":1,
    "variables":{"x":[0,1],"y":[0,1]},
    "modes":[{"name":"m","flow":{"x":[0,1]}}]})"));
}

TEST_CASE("single-mode rha with unit flow: displacement equals duration") {
  SystemModel m;
  m.kind = ModelKind::Rha;
  m.horizon = 4.0;
  m.rha.variables = {{"x", {0, 20}}};
  m.rha.modes.push_back({"only", {{"x", {1, 1}}}, {}});
  m.rha.init = {{"x", {0, 0}}};

  FormulaPtr phi = prepare_formula(parse_formula("x >= 0"));
  EncodingContext ctx(phi, params(2, 4.0));
  ctx.encode_time_sequence();
  ModelEncoder::encode(m, ctx, 8);
  StlEncoder::encode_formula(ctx);
  SolveResult res = run(ctx);
  REQUIRE(res.status == SolveResult::Status::Optimal);
  auto asg = ctx.model().bind_solution(res.values);
  for (int i = 1; i <= 2; ++i) {
    double dx = at(asg, "x_" + std::to_string(i) + "_x") -
                at(asg, "x_" + std::to_string(i - 1) + "_x");
    double d = at(asg, "g_" + std::to_string(i)) -
               at(asg, "g_" + std::to_string(i - 1));
    CHECK(dx == doctest::Approx(d).epsilon(1e-6));
  }
  CHECK(at(asg, "x_2_x") == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("nav mode l1 flow box bounds the displacement") {
  SystemModel nav = load_model_file(benchmarks_dir() + "/nav.json");
  nav.rha.initial_modes = {"l1"};
  nav.rha.init = {{"x", {1, 1}}, {"y", {6, 6}}};
  FormulaPtr phi = prepare_formula(parse_formula("x >= 0"));
  EncodingContext ctx(phi, params(1, 2.0));
  ctx.encode_time_sequence();
  ModelEncoder::encode_rha(nav.rha, ctx);
  StlEncoder::encode_formula(ctx);
  SolveResult res = run(ctx);
  REQUIRE(res.status == SolveResult::Status::Optimal);
  auto asg = ctx.model().bind_solution(res.values);
  CHECK(at(asg, "x_1_x") - at(asg, "x_0_x") == doctest::Approx(2.0).epsilon(1e-6));
  double dy = at(asg, "x_1_y") - at(asg, "x_0_y");
  CHECK(dy >= 0.2 - 1e-6);
  CHECK(dy <= 4.0 + 1e-6);
}

TEST_CASE("rha invariants restrict knot states") {
  SystemModel nav = load_model_file(benchmarks_dir() + "/nav.json");
  FormulaPtr phi = prepare_formula(parse_formula("x >= 0"));
  EncodingContext ctx(phi, params(2, 3.0));
  ctx.encode_time_sequence();
  ModelEncoder::encode_rha(nav.rha, ctx);
  StlEncoder::encode_formula(ctx);
  SolveResult res = run(ctx);
  REQUIRE(res.status == SolveResult::Status::Optimal);
  auto asg = ctx.model().bind_solution(res.values);
  CHECK(at(asg, "x_0_x") <= 3.0 + 1e-6);
  CHECK(at(asg, "x_0_y") == doctest::Approx(0.0).epsilon(1e-6));
  for (int i = 1; i <= 2; ++i) {
    for (int l = 0; l < 4; ++l) {
      std::string name = "mode_" + std::to_string(i) + "_" + std::to_string(l);
      if (asg.count(name) && asg.at(name) > 0.5) {
        const auto& inv = nav.rha.modes[l].invariant;
        for (const auto& [v, box] : inv) {
          for (int knot : {i - 1, i}) {
            double value = at(asg, "x_" + std::to_string(knot) + "_" + v);
            CHECK(value >= box.first - 1e-6);
            CHECK(value <= box.second + 1e-6);
          }
        }
      }
    }
  }
}

TEST_CASE("rha update transitions split the knot state") {
  // two stationary modes for x; the jump A -> B resets x from [0,1] to
  // [5,6]. y integrates at rate 1 only in B, and the spec asks for y to
  // grow, so the jump must fire. The atom lives on the continuous y, the
  // jumped x is checked through the model constraints.
  SystemModel m;
  m.kind = ModelKind::Rha;
  m.horizon = 2.0;
  m.rha.variables = {{"x", {0, 10}}, {"y", {0, 10}}};
  m.rha.modes.push_back(
      {"A", {{"x", {0, 0}}, {"y", {0, 0}}}, {{"x", {0, 1}}}});
  m.rha.modes.push_back(
      {"B", {{"x", {0, 0}}, {"y", {1, 1}}}, {{"x", {5, 6}}}});
  RhaTransition t;
  t.from = "A";
  t.to = "B";
  t.update = {"x"};
  t.post = {{"x", {5, 6}}};
  m.rha.transitions.push_back(t);
  m.rha.initial_modes = {"A"};
  m.rha.init = {{"x", {0, 0}}, {"y", {0, 0}}};

  FormulaPtr phi = prepare_formula(parse_formula("F[0,2] (y >= 0.5)"));
  EncodingContext ctx(phi, params(3, 2.0));
  ctx.encode_time_sequence();
  ModelEncoder::encode(m, ctx, 8);
  StlEncoder::encode_formula(ctx);
  SolveResult res = run(ctx);
  REQUIRE(res.status == SolveResult::Status::Optimal);
  auto asg = ctx.model().bind_solution(res.values);
  bool jumped = false;
  for (int i = 1; i <= 2; ++i) {
    std::string jname = "jump_" + std::to_string(i) + "_0";
    if (asg.count(jname) && asg.at(jname) > 0.5) {
      jumped = true;
      // pre value stays in A's invariant, post lands in the reset box
      CHECK(at(asg, "xpre_" + std::to_string(i) + "_x") <= 1.0 + 1e-6);
      CHECK(at(asg, "x_" + std::to_string(i) + "_x") >= 5.0 - 1e-6);
    }
  }
  CHECK(jumped);
  CHECK(at(asg, "x_3_y") >= 0.5 - 1e-6);
}

TEST_CASE("double integrator: constant full acceleration for five seconds") {
  SystemModel toy = load_model_file(benchmarks_dir() + "/toy.json");
  FormulaPtr phi = prepare_formula(parse_formula("F[0,5] (x >= 12)"));
  EncodingContext ctx(phi, params(2, 5.0));
  ctx.encode_time_sequence();
  ModelEncoder::encode(toy, ctx, 8);
  StlEncoder::encode_formula(ctx);
  SolveResult res = run(ctx, 120);
  REQUIRE(res.status == SolveResult::Status::Optimal);
  auto asg = ctx.model().bind_solution(res.values);
  // trapezoid identities hold exactly on the duration grid
  for (int i = 1; i <= 2; ++i) {
    double d = at(asg, "g_" + std::to_string(i)) - at(asg, "g_" + std::to_string(i - 1));
    double acc = at(asg, "x_" + std::to_string(i) + "_a");
    double dv = at(asg, "x_" + std::to_string(i) + "_v") -
                at(asg, "x_" + std::to_string(i - 1) + "_v");
    CHECK(dv == doctest::Approx(acc * d).epsilon(1e-6));
    double dx = at(asg, "x_" + std::to_string(i) + "_x") -
                at(asg, "x_" + std::to_string(i - 1) + "_x");
    double vmid = 0.5 * (at(asg, "x_" + std::to_string(i) + "_v") +
                         at(asg, "x_" + std::to_string(i - 1) + "_v"));
    CHECK(dx == doctest::Approx(vmid * d).epsilon(1e-6));
  }
  CHECK(at(asg, "x_2_x") >= 12.0 - 1e-6);
}

TEST_CASE("double integrator: zero acceleration advances x by d*v0") {
  SystemModel m;
  m.kind = ModelKind::DoubleIntegrator;
  m.horizon = 4.0;
  DoubleIntegratorAgent a;
  a.position = "x";
  a.velocity = "v";
  a.acceleration = "a";
  a.position_bounds = {-50, 50};
  a.velocity_bounds = {-10, 10};
  a.acceleration_bounds = {0, 0};
  a.initial_position = {1, 1};
  a.initial_velocity = {3, 3};
  m.di.agents.push_back(a);

  FormulaPtr phi = prepare_formula(parse_formula("x >= 0"));
  EncodingContext ctx(phi, params(2, 4.0));
  ctx.encode_time_sequence();
  ModelEncoder::encode(m, ctx, 8);
  StlEncoder::encode_formula(ctx);
  SolveResult res = run(ctx);
  REQUIRE(res.status == SolveResult::Status::Optimal);
  auto asg = ctx.model().bind_solution(res.values);
  CHECK(at(asg, "x_2_x") == doctest::Approx(1.0 + 3.0 * 4.0).epsilon(1e-6));
  CHECK(at(asg, "x_2_v") == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("closed form: quadratic flow interpolates with bounded error") {
  // f(t) = t^2 sampled at dt = 1; at elapsed 1.5 the interpolation gives
  // (1 + 4)/2 = 2.5, true value 2.25, error <= dt^2/4
  SystemModel m;
  m.kind = ModelKind::ClosedForm;
  m.horizon = 1.5;
  m.cf.state_vars = {{"z", {-10, 10}}};
  m.cf.dt = 1.0;
  ClosedFormMode mode;
  mode.name = "only";
  for (int k = 0; k <= 2; ++k) {
    ClosedFormMode::AffineRow r;
    r.constant = k * k;
    mode.sampled_maps.push_back({{"z", r}});
  }
  m.cf.modes.push_back(mode);

  FormulaPtr phi = prepare_formula(parse_formula("z >= 0"));
  EncodingContext ctx(phi, params(1, 1.5));
  ctx.encode_time_sequence();
  ModelEncoder::encode(m, ctx, 8);
  StlEncoder::encode_formula(ctx);
  SolveResult res = run(ctx);
  REQUIRE(res.status == SolveResult::Status::Optimal);
  auto asg = ctx.model().bind_solution(res.values);
  double z = at(asg, "x_1_z");
  CHECK(z == doctest::Approx(2.5).epsilon(1e-6));
  CHECK(std::abs(z - 1.5 * 1.5) <= 0.25 + 1e-9);
}

TEST_CASE("closed form: sample knots are exact") {
  SystemModel m;
  m.kind = ModelKind::ClosedForm;
  m.horizon = 2.0;
  m.cf.state_vars = {{"z", {-10, 10}}};
  m.cf.dt = 1.0;
  ClosedFormMode mode;
  mode.name = "only";
  for (int k = 0; k <= 3; ++k) {
    ClosedFormMode::AffineRow r;
    r.constant = k * k;
    mode.sampled_maps.push_back({{"z", r}});
  }
  m.cf.modes.push_back(mode);

  FormulaPtr phi = prepare_formula(parse_formula("z >= 0"));
  EncodingContext ctx(phi, params(1, 2.0));
  ctx.encode_time_sequence();
  ModelEncoder::encode(m, ctx, 8);
  StlEncoder::encode_formula(ctx);
  SolveResult res = run(ctx);
  REQUIRE(res.status == SolveResult::Status::Optimal);
  auto asg = ctx.model().bind_solution(res.values);
  CHECK(at(asg, "x_1_z") == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("closed form: linear flows are exact everywhere on the grid") {
  SystemModel m;
  m.kind = ModelKind::ClosedForm;
  m.horizon = 1.25;
  m.cf.state_vars = {{"z", {-20, 20}}};
  m.cf.dt = 1.0;
  ClosedFormMode mode;
  mode.name = "only";
  for (int k = 0; k <= 2; ++k) {
    ClosedFormMode::AffineRow r;
    r.constant = 3.0 * k;
    r.entry_coeffs["z"] = 1.0;
    mode.sampled_maps.push_back({{"z", r}});
  }
  m.cf.modes.push_back(mode);
  m.cf.init = {{"z", {2, 2}}};

  FormulaPtr phi = prepare_formula(parse_formula("z >= 0"));
  EncodingContext ctx(phi, params(1, 1.25));
  ctx.encode_time_sequence();
  ModelEncoder::encode(m, ctx, 8);
  StlEncoder::encode_formula(ctx);
  SolveResult res = run(ctx);
  REQUIRE(res.status == SolveResult::Status::Optimal);
  auto asg = ctx.model().bind_solution(res.values);
  CHECK(at(asg, "x_1_z") == doctest::Approx(2.0 + 3.0 * 1.25).epsilon(1e-6));
}

TEST_CASE("closed form table must cover the horizon") {
  SystemModel m;
  m.kind = ModelKind::ClosedForm;
  m.horizon = 5.0;
  m.cf.state_vars = {{"z", {-10, 10}}};
  m.cf.dt = 1.0;
  ClosedFormMode mode;
  mode.name = "only";
  for (int k = 0; k <= 2; ++k) {
    ClosedFormMode::AffineRow r;
    r.constant = k;
    mode.sampled_maps.push_back({{"z", r}});
  }
  m.cf.modes.push_back(mode);
  CHECK_THROWS(m.validate());
}

TEST_CASE("identity model registers bounds only") {
  SystemModel m;
  m.kind = ModelKind::Identity;
  m.horizon = 3.0;
  m.identity.variables = {{"u", {-1, 1}}};
  FormulaPtr phi = prepare_formula(parse_formula("u >= 0"));
  EncodingContext ctx(phi, params(1, 3.0));
  ctx.encode_time_sequence();
  ModelEncoder::encode(m, ctx, 8);
  StlEncoder::encode_formula(ctx);
  SolveResult res = run(ctx);
  CHECK(res.status == SolveResult::Status::Optimal);
}
