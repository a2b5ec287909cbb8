#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "test_support.hpp"

using namespace stlts;
using namespace stlts::test;

namespace {
// x ramps 2 -> 0 over [0,2]; p is x >= 1
PwlTrace ramp() { return make_trace1("x", {0, 2}, {2, 0}); }
FormulaPtr p_atom() { return Formula::atom(pred_ge("x", 1.0)); }
}  // namespace

TEST_CASE("atom truth set of a single crossing") {
  auto set = truth_intervals(ramp(), p_atom());
  REQUIRE(set.items().size() == 1);
  CHECK(set.items()[0].lo == doctest::Approx(0.0));
  CHECK(set.items()[0].hi == doctest::Approx(1.0));
  CHECK(set.items()[0].hi_closed);
}

TEST_CASE("eventually dilates the truth set") {
  FormulaPtr f = Formula::eventually(win(0, 1), p_atom());
  auto set = truth_intervals(ramp(), f);
  REQUIRE(set.items().size() == 1);
  CHECK(set.items()[0].lo == doctest::Approx(0.0));
  CHECK(set.items()[0].hi == doctest::Approx(1.0));
}

TEST_CASE("unbounded always false when the tail violates") {
  FormulaPtr f = Formula::always(unbounded(), p_atom());
  auto set = truth_intervals(ramp(), f);
  CHECK(set.is_empty());  // x(T) = 0 < 1, constant extension kills always
}

TEST_CASE("unbounded always true when the tail satisfies") {
  PwlTrace up = make_trace1("x", {0, 2}, {0, 2});
  FormulaPtr f = Formula::always(unbounded(), p_atom());
  auto set = truth_intervals(up, f);
  REQUIRE_FALSE(set.is_empty());
  CHECK(set.items()[0].lo == doctest::Approx(1.0));
  CHECK(set.items()[0].hi == doctest::Approx(2.0));
}

TEST_CASE("sat examples") {
  CHECK(sat(ramp(), Formula::mk_true()));
  CHECK(sat(ramp(), p_atom()));  // x(0) = 2 >= 1
  CHECK_FALSE(sat(ramp(), Formula::eventually(win(1.5, 2.0), p_atom())));
  CHECK(sat(ramp(), Formula::eventually(win(0, 1), p_atom())));
}

TEST_CASE("robustness base cases") {
  CHECK(robustness(ramp(), p_atom()) == doctest::Approx(1.0));
  CHECK(robustness(ramp(), Formula::negation(p_atom())) == doctest::Approx(-1.0));
  CHECK(robustness(ramp(), Formula::mk_false()) ==
        -std::numeric_limits<double>::infinity());
  CHECK(robustness(ramp(), Formula::mk_true()) ==
        std::numeric_limits<double>::infinity());
}

TEST_CASE("robustness of temporal operators on the ramp") {
  // sup over [0,1] of margin(t) = 1 - t is 1 at t=0
  CHECK(robustness(ramp(), Formula::eventually(win(0, 1), p_atom())) ==
        doctest::Approx(1.0));
  // inf over [0,1]: margin(1) = 0
  CHECK(robustness(ramp(), Formula::always(win(0, 1), p_atom())) ==
        doctest::Approx(0.0));
  // unbounded always: margin at the horizon is -1
  CHECK(robustness(ramp(), Formula::always(unbounded(), p_atom())) ==
        doctest::Approx(-1.0));
}

TEST_CASE("truth intervals agree with brute-force sampling (random)") {
  std::mt19937 rng(101);
  int checked = 0;
  for (int k = 0; k < 60; ++k) {
    PwlTrace t = random_trace(rng, {"x", "y"}, 5, 6.0, -4.0, 4.0);
    FormulaPtr f = random_formula(rng, {"x", "y"}, 2, 6.0, -3.0, 3.0);
    auto set = truth_intervals(t, f);
    for (int j = 0; j <= 100; ++j) {
      double at = 6.0 * j / 100.0;
      // skip points within tolerance of a boundary: the sampled oracle
      // cannot resolve them
      bool near_boundary = false;
      for (const auto& iv : set.items()) {
        if (std::abs(at - iv.lo) < 2e-2 || std::abs(at - iv.hi) < 2e-2)
          near_boundary = true;
      }
      if (near_boundary) continue;
      CHECK(set.contains(at) == naive_sat(t, f, at));
      ++checked;
    }
  }
  CHECK(checked > 3000);
}

TEST_CASE("nnf preserves boolean truth on random traces") {
  std::mt19937 rng(202);
  for (int k = 0; k < 200; ++k) {
    PwlTrace t = random_trace(rng, {"x", "y"}, 4, 5.0, -4.0, 4.0);
    FormulaPtr f = random_formula(rng, {"x", "y"}, 3, 5.0, -3.0, 3.0);
    FormulaPtr g = to_nnf(f);
    CHECK(sat(t, f) == sat(t, g));
  }
}

TEST_CASE("bounded until/release rewriting preserves truth at 0") {
  std::mt19937 rng(303);
  for (int k = 0; k < 200; ++k) {
    PwlTrace t = random_trace(rng, {"x", "y"}, 4, 5.0, -4.0, 4.0);
    FormulaPtr f = to_nnf(random_formula(rng, {"x", "y"}, 3, 5.0, -3.0, 3.0));
    FormulaPtr g = rewrite_bounded_ur(f);
    CHECK(sat(t, f) == sat(t, g));
  }
}

TEST_CASE("eventually coincides with true-until (random)") {
  std::mt19937 rng(404);
  for (int k = 0; k < 100; ++k) {
    PwlTrace t = random_trace(rng, {"x"}, 4, 5.0, -4.0, 4.0);
    FormulaPtr body = random_formula(rng, {"x"}, 1, 5.0, -3.0, 3.0);
    Interval w = (k % 2 == 0) ? win(0.5, 2.0) : unbounded();
    FormulaPtr ev = Formula::eventually(w, body);
    FormulaPtr tu = Formula::until(w, Formula::mk_true(), body);
    CHECK(sat(t, ev) == sat(t, tu));
  }
}

TEST_CASE("sign agreement between robustness and sat (random)") {
  std::mt19937 rng(505);
  int informative = 0;
  for (int k = 0; k < 300; ++k) {
    PwlTrace t = random_trace(rng, {"x", "y"}, 4, 5.0, -4.0, 4.0);
    FormulaPtr f = random_formula(rng, {"x", "y"}, 3, 5.0, -3.0, 3.0);
    double r = robustness(t, f);
    if (r > 1e-9) {
      CHECK(sat(t, f));
      ++informative;
    } else if (r < -1e-9) {
      CHECK_FALSE(sat(t, f));
      ++informative;
    }
  }
  CHECK(informative > 250);
}

TEST_CASE("delta-tightening bridge: sat of tightened implies robustness >= delta") {
  std::mt19937 rng(606);
  double delta = 0.3;
  int hits = 0;
  for (int k = 0; k < 300; ++k) {
    PwlTrace t = random_trace(rng, {"x", "y"}, 4, 5.0, -4.0, 4.0);
    FormulaPtr f = to_nnf(random_formula(rng, {"x", "y"}, 2, 5.0, -3.0, 3.0));
    FormulaPtr tight = delta_tighten(f, delta);
    if (sat(t, tight)) {
      CHECK(robustness(t, f) >= delta - 1e-9);
      ++hits;
    }
  }
  CHECK(hits > 50);
}

TEST_CASE("delta-tightening is monotone: tightened sat implies plain sat") {
  std::mt19937 rng(707);
  for (int k = 0; k < 200; ++k) {
    PwlTrace t = random_trace(rng, {"x", "y"}, 4, 5.0, -4.0, 4.0);
    FormulaPtr f = to_nnf(random_formula(rng, {"x", "y"}, 2, 5.0, -3.0, 3.0));
    FormulaPtr tight = delta_tighten(f, 0.25);
    auto tset = truth_intervals(t, tight);
    auto fset = truth_intervals(t, f);
    for (int j = 0; j <= 40; ++j) {
      double at = 5.0 * j / 40.0;
      if (tset.contains(at)) CHECK(fset.contains(at));
    }
  }
}

TEST_CASE("unbounded eventually equals suffix dilation under extension") {
  std::mt19937 rng(808);
  for (int k = 0; k < 100; ++k) {
    PwlTrace t = random_trace(rng, {"x"}, 4, 5.0, -4.0, 4.0);
    FormulaPtr body = random_formula(rng, {"x"}, 1, 5.0, -3.0, 3.0);
    auto child = truth_intervals(t, body);
    auto full = truth_intervals(t, Formula::eventually(unbounded(), body));
    // dilation by [0, inf): every point left of a truth point is in
    for (int j = 0; j <= 50; ++j) {
      double at = 5.0 * j / 50.0;
      bool expect = false;
      for (const auto& iv : child.items())
        if (iv.hi >= at - 1e-12) expect = true;
      CHECK(full.contains(at) == expect);
    }
  }
}

TEST_CASE("conservative valuation accepts the textbook partition") {
  // x: 1.4 -> 1 -> 0.2 -> 1 -> 1.6 -> 1 -> 0.4 roughly; a delta-stable
  // partition for p: x >= 1 with delta = 0.2 claims T,F,T,F on the pieces
  PwlTrace t = make_trace1("x", {0, 1, 2, 3, 4, 5, 6},
                           {1.4, 1.0, 0.2, 1.0, 1.6, 1.0, 0.4});
  FormulaPtr p = p_atom();
  std::vector<double> gamma{0, 1, 3, 5, 6};
  Valuation theta;
  std::string key = pretty_print(p);
  theta[{key, 1}] = true;
  theta[{key, 2}] = false;
  theta[{key, 3}] = true;
  theta[{key, 4}] = false;
  CHECK(check_conservative_valuation(t, p, gamma, theta, 0.2));

  // claiming true everywhere contradicts the dip below 1
  Valuation all_true;
  for (int i = 1; i <= 4; ++i) all_true[{key, i}] = true;
  CHECK_FALSE(check_conservative_valuation(t, p, gamma, all_true, 0.2));

  // claiming false everywhere contradicts robust truth on interval 1
  Valuation all_false;
  for (int i = 1; i <= 4; ++i) all_false[{key, i}] = false;
  CHECK_FALSE(check_conservative_valuation(t, p, gamma, all_false, 0.2));
}

TEST_CASE("monitor handles difference predicates") {
  PwlTrace t = make_trace({0, 10, 20},
                          {{{"xf", 50.0}, {"xr", 0.0}},
                           {{"xf", 60.0}, {"xr", 55.0}},
                           {{"xf", 70.0}, {"xr", 62.0}}});
  FormulaPtr danger = parse_formula("xf - xr <= 10");
  auto set = truth_intervals(t, danger);
  REQUIRE_FALSE(set.is_empty());
  CHECK(sat(t, Formula::eventually(unbounded(), danger)));
  CHECK_FALSE(sat(t, danger));
}
