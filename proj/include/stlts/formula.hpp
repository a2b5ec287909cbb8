// STL / PSTL abstract syntax, concrete-syntax parser, and the formula
// transformations used by the encoder: negation normal form, bounded
// until/release rewriting, delta-tightening, and parameter instantiation.
//
// Formula objects are immutable after construction and shared through
// shared_ptr<const Formula>; they can be read from any thread.

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stlts {

// A closed half-space predicate over named real variables:
//   holds(x)  iff  sum_v coeffs[v]*x[v] + offset + param_coeff*param >= 0.
// param (with param_coeff in {-1,+1}) is only present in parametric formulas.
struct LinearPredicate {
  std::map<std::string, double> coeffs;
  double offset = 0.0;
  std::optional<std::string> param;  // magnitude parameter, if any
  double param_coeff = 0.0;          // -1 or +1 when param is set

  // c^T x + b for a concrete state; throws if a variable is missing.
  double margin(const std::map<std::string, double>& state) const;

  bool has_param() const { return param.has_value(); }
  LinearPredicate negated() const;  // the complementary closed predicate p^-
};

// Time window of a temporal operator. hi may be +infinity (with lo == 0).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  std::optional<std::string> lo_param, hi_param;  // timing parameters

  bool unbounded() const;
  bool has_param() const { return lo_param || hi_param; }
};

enum class NodeKind {
  True,
  False,
  Atom,
  Not,
  And,
  Or,
  Eventually,
  Always,
  Until,
  Release
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  NodeKind kind{};
  LinearPredicate pred;             // Atom
  Interval window;                  // temporal nodes
  std::vector<FormulaPtr> children;

  static FormulaPtr mk_true();
  static FormulaPtr mk_false();
  static FormulaPtr atom(LinearPredicate p);
  static FormulaPtr negation(FormulaPtr f);
  static FormulaPtr conj(std::vector<FormulaPtr> cs);
  static FormulaPtr disj(std::vector<FormulaPtr> cs);
  static FormulaPtr eventually(Interval w, FormulaPtr f);
  static FormulaPtr always(Interval w, FormulaPtr f);
  static FormulaPtr until(Interval w, FormulaPtr lhs, FormulaPtr rhs);
  static FormulaPtr release(Interval w, FormulaPtr lhs, FormulaPtr rhs);

  bool is_temporal() const {
    return kind == NodeKind::Eventually || kind == NodeKind::Always ||
           kind == NodeKind::Until || kind == NodeKind::Release;
  }
};

// Canonical text form. parse(pretty_print(f)) reproduces f exactly
// (floats are printed with round-trip precision).
std::string pretty_print(const FormulaPtr& f);

// Deterministic postorder enumeration of the distinct subformulas of f,
// including f itself. Structurally equal subtrees appear once.
std::vector<FormulaPtr> enumerate_subformulas(const FormulaPtr& f);

// Variables and parameters mentioned anywhere in the formula.
std::vector<std::string> collect_variables(const FormulaPtr& f);
std::vector<std::string> collect_magnitude_params(const FormulaPtr& f);
std::vector<std::string> collect_timing_params(const FormulaPtr& f);

struct ParamDomain {
  double lo = 0.0, hi = 0.0;
};

// A parsed spec file: the formula plus the declared parameter domains.
// Plain STL specs have empty domain maps.
struct ParsedSpec {
  FormulaPtr formula;
  std::map<std::string, ParamDomain> magnitude_domains;
  std::map<std::string, ParamDomain> timing_domains;

  bool is_parametric() const {
    return !magnitude_domains.empty() || !timing_domains.empty();
  }
};

struct ParseError : std::runtime_error {
  int line, column;
  ParseError(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg), line(line_), column(col_) {}
};

// Parses the spec-file grammar:
//   spec      := {letdef | paramdecl} "formula" ":" formula
//   letdef    := IDENT ":=" formula ";"
//   paramdecl := "param" IDENT "in" "[" NUM "," NUM "]" ";"
// Comparisons <=, <, >=, > are normalized to >=-form atoms; strict
// comparisons are closed. Implication a -> b expands to !a || b.
// Let-bound names are substituted before anything else runs.
ParsedSpec parse_spec(const std::string& text);

// Parses a bare formula (no let/param prelude).
FormulaPtr parse_formula(const std::string& text);

// Rejects windows the encoding has no case for: lo > hi, lo < 0,
// [a, inf) with a > 0, singular temporal windows.
void validate_windows(const FormulaPtr& f);

// Negation normal form. The result contains no Not node: negation is
// absorbed into complementary atoms p^- (coefficients and offset flipped).
FormulaPtr to_nnf(const FormulaPtr& f);

// Rewrites every bounded Until/Release (input must be in NNF):
//   p U[a,b] q  ~>  F[a,b] q && G[0,a] (p U q)
//   p R[a,b] q  ~>  G[a,b] q || F[0,a] (p R q)
// with the degenerate G[0,0]/F[0,0] factor dropped when a = 0.
FormulaPtr rewrite_bounded_ur(const FormulaPtr& f);

// delta-tightening of an NNF formula: every atom's offset is lowered by
// delta, so "c^T x + b >= 0" becomes "c^T x + b >= delta". delta > 0.
FormulaPtr delta_tighten(const FormulaPtr& f, double delta);

// Substitutes parameter values; every parameter in the tree must be given
// and lie in its declared domain.
FormulaPtr instantiate(const ParsedSpec& spec,
                       const std::map<std::string, double>& magnitude,
                       const std::map<std::string, double>& timing);

}  // namespace stlts
