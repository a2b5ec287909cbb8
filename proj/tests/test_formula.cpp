#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "test_support.hpp"

using namespace stlts;
using namespace stlts::test;

TEST_CASE("parse normalizes comparisons to >= form") {
  FormulaPtr f = parse_formula("xf - xr <= 10");
  REQUIRE(f->kind == NodeKind::Atom);
  CHECK(f->pred.coeffs.at("xf") == -1.0);
  CHECK(f->pred.coeffs.at("xr") == 1.0);
  CHECK(f->pred.offset == 10.0);
  CHECK(f->pred.margin({{"xf", 15.0}, {"xr", 0.0}}) == doctest::Approx(-5.0));
}

TEST_CASE("parse G and windows") {
  FormulaPtr f = parse_formula("G (x >= 1)");
  REQUIRE(f->kind == NodeKind::Always);
  CHECK(f->window.lo == 0.0);
  CHECK(std::isinf(f->window.hi));
  REQUIRE(f->children[0]->kind == NodeKind::Atom);
  CHECK(f->children[0]->pred.coeffs.at("x") == 1.0);
  CHECK(f->children[0]->pred.offset == -1.0);
}

TEST_CASE("let bindings expand before normalization") {
  ParsedSpec spec = parse_spec(
      "danger := xf - xr <= 10;\n"
      "formula: F[0,9] G[0,1] danger\n");
  REQUIRE(spec.formula->kind == NodeKind::Eventually);
  CHECK(spec.formula->window.lo == 0.0);
  CHECK(spec.formula->window.hi == 9.0);
  const auto& inner = spec.formula->children[0];
  REQUIRE(inner->kind == NodeKind::Always);
  CHECK(inner->window.hi == 1.0);
  CHECK(inner->children[0]->kind == NodeKind::Atom);
}

TEST_CASE("implication expands to disjunction") {
  FormulaPtr f = parse_formula("x >= 1 -> y >= 2");
  REQUIRE(f->kind == NodeKind::Or);
  CHECK(f->children[0]->kind == NodeKind::Not);
}

TEST_CASE("precedence: temporal binds tighter than &&") {
  FormulaPtr f = parse_formula("G (x >= 1) && y >= 0");
  CHECK(f->kind == NodeKind::And);
  FormulaPtr g = parse_formula("x >= 1 U y >= 0 && z >= 0");
  CHECK(g->kind == NodeKind::And);
  CHECK(g->children[0]->kind == NodeKind::Until);
}

TEST_CASE("parse errors carry positions") {
  CHECK_THROWS_AS(parse_formula("x >="), ParseError);
  CHECK_THROWS_AS(parse_formula("(("), ParseError);
  CHECK_THROWS_AS(parse_spec("formula x >= 1"), ParseError);
}

TEST_CASE("nnf removes negations and builds complementary atoms") {
  FormulaPtr f = parse_formula("!(x >= 1)");
  FormulaPtr g = to_nnf(f);
  REQUIRE(g->kind == NodeKind::Atom);
  CHECK(g->pred.coeffs.at("x") == -1.0);
  CHECK(g->pred.offset == 1.0);

  FormulaPtr h = to_nnf(parse_formula("!((x >= 1) && (y >= 2))"));
  CHECK(h->kind == NodeKind::Or);

  FormulaPtr ev = to_nnf(parse_formula("!(F[1,2] (x >= 1))"));
  CHECK(ev->kind == NodeKind::Always);
  CHECK(ev->children[0]->kind == NodeKind::Atom);
}

TEST_CASE("nnf keeps until/release dual") {
  FormulaPtr f = to_nnf(parse_formula("!(x >= 1 U[1,2] y >= 2)"));
  CHECK(f->kind == NodeKind::Release);
  FormulaPtr g = to_nnf(parse_formula("!(x >= 1 R y >= 2)"));
  CHECK(g->kind == NodeKind::Until);
}

TEST_CASE("bounded until rewriting") {
  FormulaPtr f = to_nnf(parse_formula("x >= 1 U[2,5] y >= 2"));
  FormulaPtr g = rewrite_bounded_ur(f);
  REQUIRE(g->kind == NodeKind::And);
  CHECK(g->children[0]->kind == NodeKind::Eventually);
  CHECK(g->children[0]->window.lo == 2.0);
  CHECK(g->children[0]->window.hi == 5.0);
  REQUIRE(g->children[1]->kind == NodeKind::Always);
  CHECK(g->children[1]->window.hi == 2.0);
  // head factor keeps the left operand alive: lhs && (lhs U rhs)
  const auto& head = g->children[1]->children[0];
  REQUIRE(head->kind == NodeKind::And);
  CHECK(head->children[0]->kind == NodeKind::Atom);
  CHECK(head->children[1]->kind == NodeKind::Until);
  CHECK(head->children[1]->window.unbounded());
}

TEST_CASE("bounded release rewriting and the a=0 special case") {
  FormulaPtr f = to_nnf(parse_formula("x >= 1 R[2,5] y >= 2"));
  FormulaPtr g = rewrite_bounded_ur(f);
  REQUIRE(g->kind == NodeKind::Or);
  CHECK(g->children[0]->kind == NodeKind::Always);
  CHECK(g->children[1]->kind == NodeKind::Eventually);

  FormulaPtr h = rewrite_bounded_ur(to_nnf(parse_formula("x >= 1 U[0,5] y >= 2")));
  REQUIRE(h->kind == NodeKind::And);
  CHECK(h->children[0]->kind == NodeKind::Eventually);
  CHECK(h->children[1]->kind == NodeKind::Until);  // no G[0,0] factor
}

TEST_CASE("unbounded until unchanged by rewriting") {
  FormulaPtr f = to_nnf(parse_formula("x >= 1 U y >= 2"));
  FormulaPtr g = rewrite_bounded_ur(f);
  CHECK(pretty_print(f) == pretty_print(g));
}

TEST_CASE("delta tightening shifts atom offsets") {
  FormulaPtr f = to_nnf(parse_formula("x >= 1"));
  FormulaPtr g = delta_tighten(f, 0.2);
  CHECK(g->pred.offset == doctest::Approx(-1.2));  // x - 1.2 >= 0

  // tightening the complementary atom gives x <= 0.8
  FormulaPtr n = to_nnf(parse_formula("!(x >= 1)"));
  FormulaPtr ng = delta_tighten(n, 0.2);
  CHECK(ng->pred.coeffs.at("x") == -1.0);
  CHECK(ng->pred.offset == doctest::Approx(0.8));

  CHECK_THROWS(delta_tighten(f, 0.0));
  CHECK_THROWS(delta_tighten(f, -1.0));
}

TEST_CASE("window validation rejects [a,inf) with a>0") {
  FormulaPtr ok = parse_formula("G[0,5] (x >= 1)");
  CHECK_NOTHROW(validate_windows(ok));
  Interval bad;
  bad.lo = 1.0;
  bad.hi = std::numeric_limits<double>::infinity();
  FormulaPtr f = Formula::always(bad, parse_formula("x >= 1"));
  CHECK_THROWS(validate_windows(f));
  FormulaPtr g = Formula::eventually(win(3, 2), parse_formula("x >= 1"));
  CHECK_THROWS(validate_windows(g));
}

TEST_CASE("pstl parse and instantiate") {
  ParsedSpec spec = parse_spec(
      "param p in [0, 20];\n"
      "formula: F[0,5] (x >= p)\n");
  REQUIRE(spec.magnitude_domains.count("p"));
  CHECK(spec.magnitude_domains.at("p").hi == 20.0);
  const auto& atom = spec.formula->children[0];
  REQUIRE(atom->pred.has_param());
  CHECK(atom->pred.param_coeff == -1.0);  // x - p >= 0

  FormulaPtr inst = instantiate(spec, {{"p", 12.0}}, {});
  CHECK(inst->children[0]->pred.offset == doctest::Approx(-12.0));
  CHECK_FALSE(inst->children[0]->pred.has_param());

  CHECK_THROWS(instantiate(spec, {{"p", 25.0}}, {}));  // out of domain
  CHECK_THROWS(instantiate(spec, {}, {}));             // missing value
}

TEST_CASE("timing parameters in windows") {
  ParsedSpec spec = parse_spec(
      "param q in [1, 9];\n"
      "formula: F[0,q] (x >= 1)\n");
  REQUIRE(spec.timing_domains.count("q"));
  FormulaPtr inst = instantiate(spec, {}, {{"q", 9.0}});
  CHECK(inst->window.hi == 9.0);
}

TEST_CASE("no parameters: instantiate is the identity") {
  ParsedSpec spec = parse_spec("formula: F[0,5] (x >= 1)\n");
  FormulaPtr inst = instantiate(spec, {}, {});
  CHECK(pretty_print(inst) == pretty_print(spec.formula));
}

TEST_CASE("pretty-print round trips") {
  std::mt19937 rng(7);
  for (int k = 0; k < 1000; ++k) {
    FormulaPtr f = random_formula(rng, {"x", "y"}, 3, 10.0, -5.0, 5.0);
    FormulaPtr g = parse_formula(pretty_print(f));
    CHECK(pretty_print(g) == pretty_print(f));
  }
}

TEST_CASE("nnf output has no negation nodes (random property)") {
  std::mt19937 rng(11);
  for (int k = 0; k < 1000; ++k) {
    FormulaPtr f = random_formula(rng, {"x", "y"}, 3, 10.0, -5.0, 5.0);
    FormulaPtr g = to_nnf(f);
    for (const auto& sub : enumerate_subformulas(g))
      CHECK(sub->kind != NodeKind::Not);
  }
}

TEST_CASE("subformula enumeration dedups and includes the root") {
  FormulaPtr f = parse_formula("(x >= 1) && ((x >= 1) || (y >= 2))");
  auto subs = enumerate_subformulas(f);
  CHECK(subs.size() == 4);  // atom x, atom y, the disjunction, the root
  CHECK(pretty_print(subs.back()) == pretty_print(f));
}
