#include "stlts/formula.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

namespace stlts {

static constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// LinearPredicate

double LinearPredicate::margin(const std::map<std::string, double>& state) const {
  if (has_param())
    throw std::runtime_error("cannot evaluate parametric predicate");
  double m = offset;
  for (const auto& [v, c] : coeffs) {
    auto it = state.find(v);
    if (it == state.end())
      throw std::runtime_error("state does not assign variable '" + v + "'");
    m += c * it->second;
  }
  return m;
}

LinearPredicate LinearPredicate::negated() const {
  LinearPredicate q;
  for (const auto& [v, c] : coeffs) q.coeffs[v] = -c;
  q.offset = -offset;
  q.param = param;
  q.param_coeff = -param_coeff;
  return q;
}

bool Interval::unbounded() const { return std::isinf(hi) && !hi_param; }

// ---------------------------------------------------------------------------
// Constructors

static FormulaPtr mk(NodeKind k) {
  auto f = std::make_shared<Formula>();
  f->kind = k;
  return f;
}

FormulaPtr Formula::mk_true() { return mk(NodeKind::True); }
FormulaPtr Formula::mk_false() { return mk(NodeKind::False); }

FormulaPtr Formula::atom(LinearPredicate p) {
  if (p.coeffs.empty())
    throw std::runtime_error("atomic predicate needs at least one variable");
  auto f = std::make_shared<Formula>();
  f->kind = NodeKind::Atom;
  f->pred = std::move(p);
  return f;
}

FormulaPtr Formula::negation(FormulaPtr c) {
  auto f = mk(NodeKind::Not);
  const_cast<Formula*>(f.get())->children = {std::move(c)};
  return f;
}

static FormulaPtr nary(NodeKind k, std::vector<FormulaPtr> cs) {
  if (cs.size() < 2)
    throw std::runtime_error("And/Or need at least two children");
  auto f = std::make_shared<Formula>();
  f->kind = k;
  f->children = std::move(cs);
  return f;
}

FormulaPtr Formula::conj(std::vector<FormulaPtr> cs) { return nary(NodeKind::And, std::move(cs)); }
FormulaPtr Formula::disj(std::vector<FormulaPtr> cs) { return nary(NodeKind::Or, std::move(cs)); }

static FormulaPtr unary_temporal(NodeKind k, Interval w, FormulaPtr c) {
  auto f = std::make_shared<Formula>();
  f->kind = k;
  f->window = std::move(w);
  f->children = {std::move(c)};
  return f;
}

FormulaPtr Formula::eventually(Interval w, FormulaPtr c) {
  return unary_temporal(NodeKind::Eventually, std::move(w), std::move(c));
}
FormulaPtr Formula::always(Interval w, FormulaPtr c) {
  return unary_temporal(NodeKind::Always, std::move(w), std::move(c));
}

static FormulaPtr binary_temporal(NodeKind k, Interval w, FormulaPtr a, FormulaPtr b) {
  auto f = std::make_shared<Formula>();
  f->kind = k;
  f->window = std::move(w);
  f->children = {std::move(a), std::move(b)};
  return f;
}

FormulaPtr Formula::until(Interval w, FormulaPtr a, FormulaPtr b) {
  return binary_temporal(NodeKind::Until, std::move(w), std::move(a), std::move(b));
}
FormulaPtr Formula::release(Interval w, FormulaPtr a, FormulaPtr b) {
  return binary_temporal(NodeKind::Release, std::move(w), std::move(a), std::move(b));
}

// ---------------------------------------------------------------------------
// Printing

static std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

static std::string print_window(const Interval& w) {
  std::string lo = w.lo_param ? *w.lo_param : num(w.lo);
  std::string hi = w.hi_param ? *w.hi_param : num(w.hi);
  if (!w.lo_param && !w.hi_param && w.lo == 0.0 && std::isinf(w.hi)) return "";
  return "[" + lo + "," + hi + "]";
}

static std::string print_atom(const LinearPredicate& p) {
  std::string s;
  bool first = true;
  for (const auto& [v, c] : p.coeffs) {
    if (!first) s += " + ";
    s += num(c) + "*" + v;
    first = false;
  }
  if (p.has_param()) {
    s += " + " + num(p.param_coeff) + "*" + *p.param;
  }
  s += " + " + num(p.offset) + " >= 0";
  return s;
}

static std::string pp(const FormulaPtr& f);

static std::string pp_paren(const FormulaPtr& f) { return "(" + pp(f) + ")"; }

static std::string pp(const FormulaPtr& f) {
  switch (f->kind) {
    case NodeKind::True: return "true";
    case NodeKind::False: return "false";
    case NodeKind::Atom: return print_atom(f->pred);
    case NodeKind::Not: return "!" + pp_paren(f->children[0]);
    case NodeKind::And: {
      std::string s;
      for (size_t i = 0; i < f->children.size(); ++i) {
        if (i) s += " && ";
        s += pp_paren(f->children[i]);
      }
      return s;
    }
    case NodeKind::Or: {
      std::string s;
      for (size_t i = 0; i < f->children.size(); ++i) {
        if (i) s += " || ";
        s += pp_paren(f->children[i]);
      }
      return s;
    }
    case NodeKind::Eventually:
      return "F" + print_window(f->window) + " " + pp_paren(f->children[0]);
    case NodeKind::Always:
      return "G" + print_window(f->window) + " " + pp_paren(f->children[0]);
    case NodeKind::Until:
      return pp_paren(f->children[0]) + " U" + print_window(f->window) + " " +
             pp_paren(f->children[1]);
    case NodeKind::Release:
      return pp_paren(f->children[0]) + " R" + print_window(f->window) + " " +
             pp_paren(f->children[1]);
  }
  throw std::logic_error("unreachable");
}

std::string pretty_print(const FormulaPtr& f) { return pp(f); }

// ---------------------------------------------------------------------------
// Structural enumeration

std::vector<FormulaPtr> enumerate_subformulas(const FormulaPtr& f) {
  std::vector<FormulaPtr> out;
  std::set<std::string> seen;
  // postorder walk; dedup on the canonical printed form
  std::vector<std::pair<FormulaPtr, bool>> stack{{f, false}};
  while (!stack.empty()) {
    auto [node, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      std::string key = pretty_print(node);
      if (seen.insert(key).second) out.push_back(node);
      continue;
    }
    stack.push_back({node, true});
    for (auto it = node->children.rbegin(); it != node->children.rend(); ++it)
      stack.push_back({*it, false});
  }
  return out;
}

std::vector<std::string> collect_variables(const FormulaPtr& f) {
  std::set<std::string> vars;
  for (const auto& sub : enumerate_subformulas(f))
    if (sub->kind == NodeKind::Atom)
      for (const auto& [v, c] : sub->pred.coeffs) vars.insert(v);
  return {vars.begin(), vars.end()};
}

std::vector<std::string> collect_magnitude_params(const FormulaPtr& f) {
  std::set<std::string> ps;
  for (const auto& sub : enumerate_subformulas(f))
    if (sub->kind == NodeKind::Atom && sub->pred.has_param())
      ps.insert(*sub->pred.param);
  return {ps.begin(), ps.end()};
}

std::vector<std::string> collect_timing_params(const FormulaPtr& f) {
  std::set<std::string> ps;
  for (const auto& sub : enumerate_subformulas(f)) {
    if (!sub->is_temporal()) continue;
    if (sub->window.lo_param) ps.insert(*sub->window.lo_param);
    if (sub->window.hi_param) ps.insert(*sub->window.hi_param);
  }
  return {ps.begin(), ps.end()};
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok {
  Ident, Num, LParen, RParen, LBracket, RBracket, Comma, Semi, Colon,
  Plus, Minus, Star, Le, Ge, Lt, Gt, Not, AndAnd, OrOr, Arrow, Assign, End
};

struct Token {
  Tok kind;
  std::string text;
  double value = 0.0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { next(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    next();
    return t;
  }

 private:
  void error(const std::string& msg) const {
    throw ParseError(msg, line_, col_);
  }

  void next() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') { ++line_; col_ = 1; ++pos_; continue; }
      if (std::isspace(static_cast<unsigned char>(c))) { ++col_; ++pos_; continue; }
      if (c == '#') {  // line comment
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
        continue;
      }
      break;
    }
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) { tok_.kind = Tok::End; tok_.text = "<eof>"; return; }

    char c = src_[pos_];
    auto two = [&](char a, char b) {
      return c == a && pos_ + 1 < src_.size() && src_[pos_ + 1] == b;
    };
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        advance();
      tok_.kind = Tok::Ident;
      tok_.text = src_.substr(start, pos_ - start);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
        advance();
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        advance();
        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
          advance();
      }
      tok_.kind = Tok::Num;
      tok_.text = src_.substr(start, pos_ - start);
      try {
        tok_.value = std::stod(tok_.text);
      } catch (...) {
        error("bad numeric literal '" + tok_.text + "'");
      }
      return;
    }
    if (two(':', '=')) { tok_.kind = Tok::Assign; eat(2, ":="); return; }
    if (two('&', '&')) { tok_.kind = Tok::AndAnd; eat(2, "&&"); return; }
    if (two('|', '|')) { tok_.kind = Tok::OrOr; eat(2, "||"); return; }
    if (two('-', '>')) { tok_.kind = Tok::Arrow; eat(2, "->"); return; }
    if (two('<', '=')) { tok_.kind = Tok::Le; eat(2, "<="); return; }
    if (two('>', '=')) { tok_.kind = Tok::Ge; eat(2, ">="); return; }
    switch (c) {
      case '(': tok_.kind = Tok::LParen; eat(1, "("); return;
      case ')': tok_.kind = Tok::RParen; eat(1, ")"); return;
      case '[': tok_.kind = Tok::LBracket; eat(1, "["); return;
      case ']': tok_.kind = Tok::RBracket; eat(1, "]"); return;
      case ',': tok_.kind = Tok::Comma; eat(1, ","); return;
      case ';': tok_.kind = Tok::Semi; eat(1, ";"); return;
      case ':': tok_.kind = Tok::Colon; eat(1, ":"); return;
      case '+': tok_.kind = Tok::Plus; eat(1, "+"); return;
      case '-': tok_.kind = Tok::Minus; eat(1, "-"); return;
      case '*': tok_.kind = Tok::Star; eat(1, "*"); return;
      case '<': tok_.kind = Tok::Lt; eat(1, "<"); return;
      case '>': tok_.kind = Tok::Gt; eat(1, ">"); return;
      case '!': tok_.kind = Tok::Not; eat(1, "!"); return;
      default: error(std::string("unexpected character '") + c + "'");
    }
  }

  void advance() { ++pos_; ++col_; }
  void eat(int n, const char* text) {
    tok_.text = text;
    for (int i = 0; i < n; ++i) advance();
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

// Linear expression accumulator used while parsing atoms.
struct LinExpr {
  std::map<std::string, double> coeffs;  // variables
  std::map<std::string, double> params;  // parameters
  double constant = 0.0;

  LinExpr& operator+=(const LinExpr& o) {
    for (auto& [v, c] : o.coeffs) coeffs[v] += c;
    for (auto& [p, c] : o.params) params[p] += c;
    constant += o.constant;
    return *this;
  }
  void scale(double k) {
    for (auto& [v, c] : coeffs) c *= k;
    for (auto& [p, c] : params) c *= k;
    constant *= k;
  }
};

class Parser {
 public:
  Parser(const std::string& src) : lex_(src) {}

  ParsedSpec parse_spec_file() {
    ParsedSpec spec;
    while (true) {
      const Token& t = lex_.peek();
      if (t.kind == Tok::Ident && t.text == "param") {
        parse_param_decl(spec);
      } else if (t.kind == Tok::Ident && t.text == "formula") {
        lex_.take();
        expect(Tok::Colon, "':' after 'formula'");
        spec.formula = parse_formula_expr(spec);
        if (lex_.peek().kind != Tok::End)
          fail("trailing input after formula");
        finish(spec);
        return spec;
      } else if (t.kind == Tok::Ident) {
        Token name = lex_.take();
        expect(Tok::Assign, "':=' in let-definition");
        FormulaPtr body = parse_formula_expr(spec);
        expect(Tok::Semi, "';' after let-definition");
        if (lets_.count(name.text))
          fail("duplicate definition of '" + name.text + "'");
        lets_[name.text] = body;
      } else {
        fail("expected let-definition, 'param', or 'formula:'");
      }
    }
  }

  FormulaPtr parse_bare_formula() {
    ParsedSpec spec;
    FormulaPtr f = parse_formula_expr(spec);
    if (lex_.peek().kind != Tok::End) fail("trailing input after formula");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    const Token& t = lex_.peek();
    throw ParseError(msg + " (got '" + t.text + "')", t.line, t.col);
  }

  Token expect(Tok k, const std::string& what) {
    if (lex_.peek().kind != k) fail("expected " + what);
    return lex_.take();
  }

  void parse_param_decl(ParsedSpec& spec) {
    lex_.take();  // 'param'
    Token name = expect(Tok::Ident, "parameter name");
    Token in = expect(Tok::Ident, "'in'");
    if (in.text != "in") fail("expected 'in' in parameter declaration");
    expect(Tok::LBracket, "'['");
    double lo = signed_number();
    expect(Tok::Comma, "','");
    double hi = signed_number();
    expect(Tok::RBracket, "']'");
    expect(Tok::Semi, "';'");
    if (!(lo <= hi)) fail("parameter domain must have lo <= hi");
    params_[name.text] = ParamDomain{lo, hi};
    spec.magnitude_domains[name.text] = ParamDomain{lo, hi};  // sorted later
  }

  double signed_number() {
    double sign = 1.0;
    while (lex_.peek().kind == Tok::Minus) { lex_.take(); sign = -sign; }
    Token t = expect(Tok::Num, "number");
    return sign * t.value;
  }

  // -> (right) < || < && < U/R (right) < unary < primary
  FormulaPtr parse_formula_expr(ParsedSpec& spec) { return parse_implies(spec); }

  FormulaPtr parse_implies(ParsedSpec& spec) {
    FormulaPtr lhs = parse_or(spec);
    if (lex_.peek().kind == Tok::Arrow) {
      lex_.take();
      FormulaPtr rhs = parse_implies(spec);
      return Formula::disj({Formula::negation(lhs), rhs});
    }
    return lhs;
  }

  FormulaPtr parse_or(ParsedSpec& spec) {
    FormulaPtr lhs = parse_and(spec);
    while (lex_.peek().kind == Tok::OrOr) {
      lex_.take();
      FormulaPtr rhs = parse_and(spec);
      lhs = Formula::disj({lhs, rhs});
    }
    return lhs;
  }

  FormulaPtr parse_and(ParsedSpec& spec) {
    FormulaPtr lhs = parse_until(spec);
    while (lex_.peek().kind == Tok::AndAnd) {
      lex_.take();
      FormulaPtr rhs = parse_until(spec);
      lhs = Formula::conj({lhs, rhs});
    }
    return lhs;
  }

  FormulaPtr parse_until(ParsedSpec& spec) {
    FormulaPtr lhs = parse_unary(spec);
    const Token& t = lex_.peek();
    if (t.kind == Tok::Ident && (t.text == "U" || t.text == "R")) {
      Token op = lex_.take();
      Interval w = parse_optional_window();
      FormulaPtr rhs = parse_until(spec);  // right associative
      return op.text == "U" ? Formula::until(w, lhs, rhs)
                            : Formula::release(w, lhs, rhs);
    }
    return lhs;
  }

  FormulaPtr parse_unary(ParsedSpec& spec) {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Not) {
      lex_.take();
      return Formula::negation(parse_unary(spec));
    }
    if (t.kind == Tok::Ident && (t.text == "G" || t.text == "F")) {
      // only a temporal operator if not used as a variable in an atom,
      // e.g. "G (x >= 1)" vs a variable literally named G compared below
      Token op = lex_.take();
      Interval w = parse_optional_window();
      FormulaPtr arg = parse_unary(spec);
      return op.text == "G" ? Formula::always(w, arg)
                            : Formula::eventually(w, arg);
    }
    return parse_primary(spec);
  }

  Interval parse_optional_window() {
    Interval w;
    w.lo = 0.0;
    w.hi = kInf;
    if (lex_.peek().kind != Tok::LBracket) return w;
    lex_.take();
    parse_bound(w, /*is_lo=*/true);
    expect(Tok::Comma, "',' in window");
    parse_bound(w, /*is_lo=*/false);
    expect(Tok::RBracket, "']' closing window");
    return w;
  }

  void parse_bound(Interval& w, bool is_lo) {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Num) {
      double v = lex_.take().value;
      (is_lo ? w.lo : w.hi) = v;
    } else if (t.kind == Tok::Ident && t.text == "inf") {
      lex_.take();
      if (is_lo) fail("window lower bound cannot be inf");
      w.hi = kInf;
    } else if (t.kind == Tok::Ident && params_.count(t.text)) {
      Token p = lex_.take();
      if (is_lo) { w.lo_param = p.text; w.lo = 0; }
      else       { w.hi_param = p.text; w.hi = 0; }
      timing_used_.insert(p.text);
    } else {
      fail("expected number, 'inf', or declared parameter in window");
    }
  }

  FormulaPtr parse_primary(ParsedSpec& spec) {
    const Token& t = lex_.peek();
    if (t.kind == Tok::LParen) {
      // could be a parenthesized formula or a parenthesized linexpr atom;
      // formulas subsume atoms, so parse as formula and allow a trailing
      // comparison only when the inner parse yielded nothing useful.
      lex_.take();
      FormulaPtr inner = parse_formula_expr(spec);
      expect(Tok::RParen, "')'");
      return inner;
    }
    if (t.kind == Tok::Ident) {
      if (t.text == "true") { lex_.take(); return Formula::mk_true(); }
      if (t.text == "false") { lex_.take(); return Formula::mk_false(); }
      if (lets_.count(t.text)) {
        // substitution happens here: the let body is already an AST
        Token name = lex_.take();
        // an identifier followed by a comparison is an atom, not a let use
        if (is_comparison(lex_.peek().kind) || is_linexpr_continuation()) {
          return parse_atom_from_ident(name);
        }
        return lets_[name.text];
      }
    }
    return parse_atom(spec);
  }

  static bool is_comparison(Tok k) {
    return k == Tok::Le || k == Tok::Ge || k == Tok::Lt || k == Tok::Gt;
  }
  bool is_linexpr_continuation() {
    Tok k = lex_.peek().kind;
    return k == Tok::Plus || k == Tok::Minus || k == Tok::Star;
  }

  FormulaPtr parse_atom_from_ident(const Token& first) {
    LinExpr lhs = parse_linexpr_after_ident(first);
    return finish_atom(lhs);
  }

  FormulaPtr parse_atom(ParsedSpec&) {
    LinExpr lhs = parse_linexpr();
    return finish_atom(lhs);
  }

  FormulaPtr finish_atom(LinExpr& lhs) {
    Tok cmp = lex_.peek().kind;
    if (!is_comparison(cmp)) fail("expected comparison in atomic predicate");
    lex_.take();
    LinExpr rhs = parse_linexpr();
    // normalize to  lhs - rhs >= 0  or  rhs - lhs >= 0
    rhs.scale(-1.0);
    lhs += rhs;
    if (cmp == Tok::Le || cmp == Tok::Lt) lhs.scale(-1.0);
    if (cmp == Tok::Lt || cmp == Tok::Gt) {
      // strict comparisons are closed; see README
      if (!strict_note_shown_) {
        std::cerr << "note: strict comparison closed to non-strict\n";
        strict_note_shown_ = true;
      }
    }
    LinearPredicate p;
    p.coeffs = lhs.coeffs;
    p.offset = lhs.constant;
    if (!lhs.params.empty()) {
      if (lhs.params.size() > 1)
        fail("at most one magnitude parameter per atom");
      auto& [name, coef] = *lhs.params.begin();
      if (std::abs(std::abs(coef) - 1.0) > 1e-12)
        fail("magnitude parameter must occur with coefficient +/-1");
      p.param = name;
      p.param_coeff = coef;
    }
    if (p.coeffs.empty()) fail("atomic predicate mentions no variable");
    return Formula::atom(std::move(p));
  }

  LinExpr parse_linexpr() {
    LinExpr e = parse_linterm();
    while (lex_.peek().kind == Tok::Plus || lex_.peek().kind == Tok::Minus) {
      bool minus = lex_.take().kind == Tok::Minus;
      LinExpr rhs = parse_linterm();
      if (minus) rhs.scale(-1.0);
      e += rhs;
    }
    return e;
  }

  LinExpr parse_linexpr_after_ident(const Token& first) {
    LinExpr e = ident_term(first);
    while (lex_.peek().kind == Tok::Plus || lex_.peek().kind == Tok::Minus) {
      bool minus = lex_.take().kind == Tok::Minus;
      LinExpr rhs = parse_linterm();
      if (minus) rhs.scale(-1.0);
      e += rhs;
    }
    return e;
  }

  LinExpr parse_linterm() {
    LinExpr e;
    double sign = 1.0;
    while (lex_.peek().kind == Tok::Minus || lex_.peek().kind == Tok::Plus) {
      if (lex_.take().kind == Tok::Minus) sign = -sign;
    }
    const Token& t = lex_.peek();
    if (t.kind == Tok::Num) {
      Token n = lex_.take();
      if (lex_.peek().kind == Tok::Star) {
        lex_.take();
        Token v = expect(Tok::Ident, "variable after '*'");
        e = ident_term(v);
        e.scale(n.value);
      } else {
        e.constant = n.value;
      }
    } else if (t.kind == Tok::Ident) {
      Token v = lex_.take();
      e = ident_term(v);
    } else if (t.kind == Tok::LParen) {
      lex_.take();
      e = parse_linexpr();
      expect(Tok::RParen, "')'");
    } else {
      fail("expected term in linear expression");
    }
    e.scale(sign);
    return e;
  }

  LinExpr ident_term(const Token& id) {
    LinExpr e;
    if (params_.count(id.text)) {
      e.params[id.text] = 1.0;
      magnitude_used_.insert(id.text);
    } else {
      e.coeffs[id.text] = 1.0;
    }
    return e;
  }

  void finish(ParsedSpec& spec) {
    // split declared parameters into magnitude/timing by where they occur
    std::map<std::string, ParamDomain> mag, tim;
    for (auto& [name, dom] : params_) {
      bool m = magnitude_used_.count(name) > 0;
      bool t = timing_used_.count(name) > 0;
      if (m && t)
        throw std::runtime_error("parameter '" + name +
                                 "' used both as magnitude and timing");
      if (m) mag[name] = dom;
      else if (t) tim[name] = dom;
      // declared but unused parameters are dropped
    }
    spec.magnitude_domains = mag;
    spec.timing_domains = tim;
  }

  Lexer lex_;
  std::map<std::string, FormulaPtr> lets_;
  std::map<std::string, ParamDomain> params_;
  std::set<std::string> magnitude_used_, timing_used_;
  bool strict_note_shown_ = false;
};

}  // namespace

ParsedSpec parse_spec(const std::string& text) {
  Parser p(text);
  return p.parse_spec_file();
}

FormulaPtr parse_formula(const std::string& text) {
  Parser p(text);
  return p.parse_bare_formula();
}

// ---------------------------------------------------------------------------
// Window validation

void validate_windows(const FormulaPtr& f) {
  for (const auto& sub : enumerate_subformulas(f)) {
    if (!sub->is_temporal()) continue;
    const Interval& w = sub->window;
    if (w.has_param()) continue;  // checked after instantiation
    if (w.lo < 0) throw std::runtime_error("window lower bound must be >= 0");
    if (std::isinf(w.hi)) {
      if (w.lo != 0.0)
        throw std::runtime_error(
            "window [a,inf) with a > 0 is not supported; use [0,inf) or a "
            "bounded window");
    } else {
      if (!(w.lo < w.hi))
        throw std::runtime_error("temporal window must satisfy lo < hi");
    }
  }
}

// ---------------------------------------------------------------------------
// NNF

static FormulaPtr nnf_pos(const FormulaPtr& f);
static FormulaPtr nnf_neg(const FormulaPtr& f);

static FormulaPtr nnf_pos(const FormulaPtr& f) {
  switch (f->kind) {
    case NodeKind::True:
    case NodeKind::False:
    case NodeKind::Atom:
      return f;
    case NodeKind::Not:
      return nnf_neg(f->children[0]);
    case NodeKind::And: {
      std::vector<FormulaPtr> cs;
      for (auto& c : f->children) cs.push_back(nnf_pos(c));
      return Formula::conj(std::move(cs));
    }
    case NodeKind::Or: {
      std::vector<FormulaPtr> cs;
      for (auto& c : f->children) cs.push_back(nnf_pos(c));
      return Formula::disj(std::move(cs));
    }
    case NodeKind::Eventually:
      return Formula::eventually(f->window, nnf_pos(f->children[0]));
    case NodeKind::Always:
      return Formula::always(f->window, nnf_pos(f->children[0]));
    case NodeKind::Until:
      return Formula::until(f->window, nnf_pos(f->children[0]), nnf_pos(f->children[1]));
    case NodeKind::Release:
      return Formula::release(f->window, nnf_pos(f->children[0]), nnf_pos(f->children[1]));
  }
  throw std::logic_error("unreachable");
}

static FormulaPtr nnf_neg(const FormulaPtr& f) {
  switch (f->kind) {
    case NodeKind::True: return Formula::mk_false();
    case NodeKind::False: return Formula::mk_true();
    case NodeKind::Atom: return Formula::atom(f->pred.negated());
    case NodeKind::Not: return nnf_pos(f->children[0]);
    case NodeKind::And: {
      std::vector<FormulaPtr> cs;
      for (auto& c : f->children) cs.push_back(nnf_neg(c));
      return Formula::disj(std::move(cs));
    }
    case NodeKind::Or: {
      std::vector<FormulaPtr> cs;
      for (auto& c : f->children) cs.push_back(nnf_neg(c));
      return Formula::conj(std::move(cs));
    }
    case NodeKind::Eventually:
      return Formula::always(f->window, nnf_neg(f->children[0]));
    case NodeKind::Always:
      return Formula::eventually(f->window, nnf_neg(f->children[0]));
    case NodeKind::Until:
      return Formula::release(f->window, nnf_neg(f->children[0]), nnf_neg(f->children[1]));
    case NodeKind::Release:
      return Formula::until(f->window, nnf_neg(f->children[0]), nnf_neg(f->children[1]));
  }
  throw std::logic_error("unreachable");
}

FormulaPtr to_nnf(const FormulaPtr& f) { return nnf_pos(f); }

// ---------------------------------------------------------------------------
// Bounded until/release rewriting

FormulaPtr rewrite_bounded_ur(const FormulaPtr& f) {
  std::vector<FormulaPtr> cs;
  for (auto& c : f->children) cs.push_back(rewrite_bounded_ur(c));
  switch (f->kind) {
    case NodeKind::True:
    case NodeKind::False:
    case NodeKind::Atom:
      return f;
    case NodeKind::Not:
      throw std::runtime_error("rewrite_bounded_ur expects NNF input");
    case NodeKind::And: return Formula::conj(std::move(cs));
    case NodeKind::Or: return Formula::disj(std::move(cs));
    case NodeKind::Eventually: return Formula::eventually(f->window, cs[0]);
    case NodeKind::Always: return Formula::always(f->window, cs[0]);
    case NodeKind::Until: {
      const Interval& w = f->window;
      if (w.unbounded()) return Formula::until(w, cs[0], cs[1]);
      Interval unb;  // [0, inf)
      unb.lo = 0.0; unb.hi = kInf;
      FormulaPtr ev = Formula::eventually(w, cs[1]);
      FormulaPtr u = Formula::until(unb, cs[0], cs[1]);
      if (w.lo == 0.0) return Formula::conj({ev, u});
      // the head factor needs the lhs itself, not just the weak until:
      // without it a lhs-gap inside [0,a) could hide under rhs truth
      Interval head; head.lo = 0.0; head.hi = w.lo;
      return Formula::conj({ev, Formula::always(head, Formula::conj({cs[0], u}))});
    }
    case NodeKind::Release: {
      const Interval& w = f->window;
      if (w.unbounded()) return Formula::release(w, cs[0], cs[1]);
      Interval unb;
      unb.lo = 0.0; unb.hi = kInf;
      FormulaPtr al = Formula::always(w, cs[1]);
      FormulaPtr r = Formula::release(unb, cs[0], cs[1]);
      if (w.lo == 0.0) return Formula::disj({al, r});
      Interval head; head.lo = 0.0; head.hi = w.lo;
      return Formula::disj({al, Formula::eventually(head, Formula::disj({cs[0], r}))});
    }
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// delta-tightening

FormulaPtr delta_tighten(const FormulaPtr& f, double delta) {
  if (!(delta > 0)) throw std::runtime_error("delta must be positive");
  switch (f->kind) {
    case NodeKind::True:
    case NodeKind::False:
      return f;
    case NodeKind::Atom: {
      LinearPredicate p = f->pred;
      p.offset -= delta;
      return Formula::atom(std::move(p));
    }
    case NodeKind::Not:
      throw std::runtime_error("delta_tighten expects NNF input");
    default: {
      std::vector<FormulaPtr> cs;
      for (auto& c : f->children) cs.push_back(delta_tighten(c, delta));
      auto g = std::make_shared<Formula>();
      g->kind = f->kind;
      g->window = f->window;
      g->children = std::move(cs);
      return g;
    }
  }
}

// ---------------------------------------------------------------------------
// PSTL instantiation

static FormulaPtr subst(const FormulaPtr& f,
                        const std::map<std::string, double>& mag,
                        const std::map<std::string, double>& tim) {
  switch (f->kind) {
    case NodeKind::True:
    case NodeKind::False:
      return f;
    case NodeKind::Atom: {
      if (!f->pred.has_param()) return f;
      auto it = mag.find(*f->pred.param);
      if (it == mag.end())
        throw std::runtime_error("no value for parameter '" + *f->pred.param + "'");
      LinearPredicate p = f->pred;
      p.offset += p.param_coeff * it->second;
      p.param.reset();
      p.param_coeff = 0.0;
      return Formula::atom(std::move(p));
    }
    default: {
      std::vector<FormulaPtr> cs;
      for (auto& c : f->children) cs.push_back(subst(c, mag, tim));
      auto g = std::make_shared<Formula>();
      g->kind = f->kind;
      g->window = f->window;
      if (g->window.lo_param) {
        auto it = tim.find(*g->window.lo_param);
        if (it == tim.end())
          throw std::runtime_error("no value for timing parameter '" +
                                   *g->window.lo_param + "'");
        g->window.lo = it->second;
        g->window.lo_param.reset();
      }
      if (g->window.hi_param) {
        auto it = tim.find(*g->window.hi_param);
        if (it == tim.end())
          throw std::runtime_error("no value for timing parameter '" +
                                   *g->window.hi_param + "'");
        g->window.hi = it->second;
        g->window.hi_param.reset();
      }
      g->children = std::move(cs);
      return g;
    }
  }
}

FormulaPtr instantiate(const ParsedSpec& spec,
                       const std::map<std::string, double>& magnitude,
                       const std::map<std::string, double>& timing) {
  for (const auto& [name, dom] : spec.magnitude_domains) {
    auto it = magnitude.find(name);
    if (it == magnitude.end())
      throw std::runtime_error("missing value for parameter '" + name + "'");
    if (it->second < dom.lo - 1e-12 || it->second > dom.hi + 1e-12)
      throw std::runtime_error("value for parameter '" + name +
                               "' is outside its declared domain");
  }
  for (const auto& [name, dom] : spec.timing_domains) {
    auto it = timing.find(name);
    if (it == timing.end())
      throw std::runtime_error("missing value for timing parameter '" + name + "'");
    if (it->second < dom.lo - 1e-12 || it->second > dom.hi + 1e-12)
      throw std::runtime_error("value for timing parameter '" + name +
                               "' is outside its declared domain");
  }
  return subst(spec.formula, magnitude, timing);
}

}  // namespace stlts
