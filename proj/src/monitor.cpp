#include "stlts/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace stlts {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// TruthIntervalSet

TruthIntervalSet TruthIntervalSet::empty() { return {}; }

TruthIntervalSet TruthIntervalSet::full(double hi) {
  TruthIntervalSet s;
  s.items_.push_back({0.0, true, hi, true});
  return s;
}

bool TruthIntervalSet::contains(double t) const {
  // endpoint positions carry round-off from the interval arithmetic
  // (window shifts of knot times), so membership is tolerant at the
  // comparison resolution
  for (const auto& iv : items_) {
    bool lo_ok = t > iv.lo - kTimeTol;
    bool hi_ok = t < iv.hi + kTimeTol;
    if (iv.lo == iv.hi && !(iv.lo_closed && iv.hi_closed)) continue;
    if (lo_ok && hi_ok) return true;
  }
  return false;
}

bool TruthIntervalSet::covers(double lo, double hi) const {
  // one normalized piece must span [lo, hi] (endpoints tolerant)
  for (const auto& iv : items_) {
    double effective_lo = iv.lo_closed ? iv.lo : iv.lo + kTimeTol;
    double effective_hi = iv.hi_closed ? iv.hi : iv.hi - kTimeTol;
    if (effective_lo <= lo + kTimeTol && effective_hi >= hi - kTimeTol) return true;
  }
  return false;
}

bool TruthIntervalSet::disjoint_from(double lo, double hi) const {
  // touching at a single point (within tolerance) is allowed
  for (const auto& iv : items_) {
    double a = std::max(iv.lo, lo), b = std::min(iv.hi, hi);
    if (a < b - kTimeTol) return false;
  }
  return true;
}

void TruthIntervalSet::add(TruthInterval iv) {
  if (iv.lo > iv.hi) return;
  if (iv.lo == iv.hi && !(iv.lo_closed && iv.hi_closed)) return;
  items_.push_back(iv);
}

void TruthIntervalSet::normalize() {
  if (items_.empty()) return;
  std::sort(items_.begin(), items_.end(), [](const TruthInterval& a, const TruthInterval& b) {
    if (a.lo != b.lo) return a.lo < b.lo;
    return a.lo_closed && !b.lo_closed;
  });
  std::vector<TruthInterval> out;
  for (auto iv : items_) {
    if (out.empty()) {
      out.push_back(iv);
      continue;
    }
    TruthInterval& last = out.back();
    // merge if overlapping or touching compatibly
    bool touch = iv.lo < last.hi ||
                 (iv.lo == last.hi && (iv.lo_closed || last.hi_closed)) ||
                 (std::abs(iv.lo - last.hi) <= kTimeTol && (iv.lo_closed || last.hi_closed));
    if (touch) {
      if (iv.hi > last.hi) {
        last.hi = iv.hi;
        last.hi_closed = iv.hi_closed;
      } else if (iv.hi == last.hi) {
        last.hi_closed = last.hi_closed || iv.hi_closed;
      }
    } else {
      out.push_back(iv);
    }
  }
  items_ = std::move(out);
}

TruthIntervalSet TruthIntervalSet::unite(const TruthIntervalSet& a,
                                         const TruthIntervalSet& b) {
  TruthIntervalSet s;
  s.items_ = a.items_;
  s.items_.insert(s.items_.end(), b.items_.begin(), b.items_.end());
  s.normalize();
  return s;
}

TruthIntervalSet TruthIntervalSet::intersect(const TruthIntervalSet& a,
                                             const TruthIntervalSet& b) {
  TruthIntervalSet s;
  for (const auto& x : a.items_) {
    for (const auto& y : b.items_) {
      TruthInterval iv;
      if (x.lo > y.lo) { iv.lo = x.lo; iv.lo_closed = x.lo_closed; }
      else if (y.lo > x.lo) { iv.lo = y.lo; iv.lo_closed = y.lo_closed; }
      else { iv.lo = x.lo; iv.lo_closed = x.lo_closed && y.lo_closed; }
      if (x.hi < y.hi) { iv.hi = x.hi; iv.hi_closed = x.hi_closed; }
      else if (y.hi < x.hi) { iv.hi = y.hi; iv.hi_closed = y.hi_closed; }
      else { iv.hi = x.hi; iv.hi_closed = x.hi_closed && y.hi_closed; }
      s.add(iv);
    }
  }
  s.normalize();
  return s;
}

TruthIntervalSet TruthIntervalSet::complement(const TruthIntervalSet& a, double hi) {
  TruthIntervalSet s;
  double cur = 0.0;
  bool cur_closed = true;
  for (const auto& iv : a.items_) {
    if (iv.lo > cur || (iv.lo == cur && !iv.lo_closed && cur_closed)) {
      TruthInterval gap;
      gap.lo = cur;
      gap.lo_closed = cur_closed;
      gap.hi = iv.lo;
      gap.hi_closed = !iv.lo_closed;
      s.add(gap);
    }
    if (iv.hi > cur || (iv.hi == cur && iv.hi_closed)) {
      cur = iv.hi;
      cur_closed = !iv.hi_closed;
    }
  }
  if (cur < hi || (cur == hi && cur_closed)) {
    TruthInterval tail;
    tail.lo = cur;
    tail.lo_closed = cur_closed;
    tail.hi = hi;
    tail.hi_closed = true;
    s.add(tail);
  }
  s.normalize();
  return s;
}

std::string TruthIntervalSet::to_json() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < items_.size(); ++i) {
    const auto& iv = items_[i];
    if (i) os << ",";
    os << "{\"lo\":" << iv.lo << ",\"lo_closed\":" << (iv.lo_closed ? "true" : "false")
       << ",\"hi\":" << iv.hi << ",\"hi_closed\":" << (iv.hi_closed ? "true" : "false")
       << "}";
  }
  os << "]";
  return os.str();
}

// ---------------------------------------------------------------------------
// Boolean semantics on interval sets

namespace {

// Atom truth set {t : margin(t) >= 0} with closed boundaries at exact
// crossings. Margins within kTimeTol of 0 count as satisfying, so solver
// round-off at deliberately tight knots does not punch holes in the set.
TruthIntervalSet atom_set(const PwlTrace& sigma, const LinearPredicate& p) {
  TruthIntervalSet s;
  const auto& ts = sigma.knots().times;
  std::vector<double> ms = sigma.knot_margins(p);
  for (size_t i = 0; i + 1 < ts.size(); ++i) {
    double m0 = ms[i], m1 = ms[i + 1];
    bool ok0 = m0 >= -kTimeTol, ok1 = m1 >= -kTimeTol;
    if (ok0 && ok1) {
      s.add({ts[i], true, ts[i + 1], true});
    } else if (ok0 != ok1) {
      double tc = ts[i] + (ts[i + 1] - ts[i]) * (0.0 - m0) / (m1 - m0);
      tc = std::clamp(tc, ts[i], ts[i + 1]);
      if (ok0) s.add({ts[i], true, tc, true});
      else s.add({tc, true, ts[i + 1], true});
    }
  }
  if (ts.size() == 1 && ms[0] >= -kTimeTol) s.add({ts[0], true, ts[0], true});
  s.normalize();
  return s;
}

// Extends pieces that reach the horizon to +inf: the trace is constant
// beyond T, so truth at T persists for all later times.
std::vector<TruthInterval> extended(const TruthIntervalSet& s, double T) {
  std::vector<TruthInterval> out = s.items();
  if (!out.empty()) {
    TruthInterval& last = out.back();
    if (last.hi >= T - kTimeTol && last.hi_closed) {
      last.hi = kInf;
      last.hi_closed = false;
    }
  }
  return out;
}

TruthIntervalSet clip(const std::vector<TruthInterval>& pieces, double T) {
  TruthIntervalSet s;
  for (auto iv : pieces) {
    iv.lo = std::max(iv.lo, 0.0);
    if (iv.hi > T) {
      iv.hi = T;
      iv.hi_closed = true;
    }
    if (iv.lo == 0.0) iv.lo_closed = true;
    s.add(iv);
  }
  s.normalize();
  return s;
}

// {t : exists s in [t+a, t+b] with s in S}, under constant extension at T.
TruthIntervalSet dilate(const TruthIntervalSet& s, double a, double b, double T) {
  std::vector<TruthInterval> ext = extended(s, T);
  std::vector<TruthInterval> out;
  for (const auto& iv : ext) {
    TruthInterval r;
    if (std::isinf(b)) {
      r.lo = 0.0;
      r.lo_closed = true;
    } else {
      r.lo = iv.lo - b;
      r.lo_closed = iv.lo_closed;
    }
    if (std::isinf(iv.hi)) {
      r.hi = kInf;
      r.hi_closed = false;
    } else {
      r.hi = iv.hi - a;
      r.hi_closed = iv.hi_closed;
    }
    out.push_back(r);
  }
  return clip(out, T);
}

TruthIntervalSet erode(const TruthIntervalSet& s, double a, double b, double T) {
  TruthIntervalSet c = TruthIntervalSet::complement(s, T);
  TruthIntervalSet d = dilate(c, a, b, T);
  return TruthIntervalSet::complement(d, T);
}

struct Bound {
  double v;
  bool closed;
};

Bound bmin(Bound x, Bound y) {
  if (x.v < y.v) return x;
  if (y.v < x.v) return y;
  return {x.v, x.closed && y.closed};
}
Bound bmax(Bound x, Bound y) {
  if (x.v > y.v) return x;
  if (y.v > x.v) return y;
  return {x.v, x.closed && y.closed};
}

// {t : exists s in [t+a, t+b], s in S2, [t, s) subset of S1}.
TruthIntervalSet until_set(const TruthIntervalSet& s1, const TruthIntervalSet& s2,
                           double a, double b, double T) {
  std::vector<TruthInterval> e1 = extended(s1, T);
  std::vector<TruthInterval> e2 = extended(s2, T);
  std::vector<TruthInterval> out;

  // witness s = t needs no S1 at all ([t, t) is empty)
  if (a == 0.0) {
    for (const auto& iv : e2) out.push_back(iv);
  }

  for (const auto& j : e1) {
    // within a maximal S1 piece [alpha, beta], the run reaches beta
    // inclusively: [t, beta) stays in S1 even when beta itself is excluded
    double alpha = j.lo, beta = j.hi;
    for (const auto& k : e2) {
      // s constrained to [max(t+a, u), min(t+b, v, beta)]
      // => t-range [max(alpha, u-b), min(beta, v-a, beta-a)]
      Bound lo{alpha, j.lo_closed};
      if (!std::isinf(b)) lo = bmax(lo, Bound{k.lo - b, k.lo_closed});
      Bound hi{beta, j.hi_closed};
      if (!std::isinf(beta)) {
        hi = bmin(hi, Bound{beta - a, true});  // reach is inclusive at beta
      }
      if (!std::isinf(k.hi)) hi = bmin(hi, Bound{k.hi - a, k.hi_closed});
      // static requirement: the s-range can only be nonempty if u <= beta
      if (k.lo > beta || (k.lo == beta && !(k.lo_closed))) continue;
      TruthInterval r;
      r.lo = lo.v;
      r.lo_closed = lo.closed;
      r.hi = hi.v;
      r.hi_closed = hi.closed;
      if (std::isinf(r.hi)) r.hi_closed = false;
      out.push_back(r);
    }
  }
  return clip(out, T);
}

TruthIntervalSet release_set(const TruthIntervalSet& s1, const TruthIntervalSet& s2,
                             double a, double b, double T) {
  TruthIntervalSet c1 = TruthIntervalSet::complement(s1, T);
  TruthIntervalSet c2 = TruthIntervalSet::complement(s2, T);
  TruthIntervalSet u = until_set(c1, c2, a, b, T);
  return TruthIntervalSet::complement(u, T);
}

TruthIntervalSet eval_set(const PwlTrace& sigma, const FormulaPtr& f,
                          std::map<std::string, TruthIntervalSet>& memo) {
  std::string key = pretty_print(f);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;

  double T = sigma.horizon();
  TruthIntervalSet r;
  switch (f->kind) {
    case NodeKind::True: r = TruthIntervalSet::full(T); break;
    case NodeKind::False: r = TruthIntervalSet::empty(); break;
    case NodeKind::Atom: r = atom_set(sigma, f->pred); break;
    case NodeKind::Not:
      r = TruthIntervalSet::complement(eval_set(sigma, f->children[0], memo), T);
      break;
    case NodeKind::And: {
      r = eval_set(sigma, f->children[0], memo);
      for (size_t i = 1; i < f->children.size(); ++i)
        r = TruthIntervalSet::intersect(r, eval_set(sigma, f->children[i], memo));
      break;
    }
    case NodeKind::Or: {
      r = eval_set(sigma, f->children[0], memo);
      for (size_t i = 1; i < f->children.size(); ++i)
        r = TruthIntervalSet::unite(r, eval_set(sigma, f->children[i], memo));
      break;
    }
    case NodeKind::Eventually:
      r = dilate(eval_set(sigma, f->children[0], memo), f->window.lo, f->window.hi, T);
      break;
    case NodeKind::Always:
      r = erode(eval_set(sigma, f->children[0], memo), f->window.lo, f->window.hi, T);
      break;
    case NodeKind::Until:
      r = until_set(eval_set(sigma, f->children[0], memo),
                    eval_set(sigma, f->children[1], memo), f->window.lo,
                    f->window.hi, T);
      break;
    case NodeKind::Release:
      r = release_set(eval_set(sigma, f->children[0], memo),
                      eval_set(sigma, f->children[1], memo), f->window.lo,
                      f->window.hi, T);
      break;
  }
  memo[key] = r;
  return r;
}

}  // namespace

TruthIntervalSet truth_intervals(const PwlTrace& sigma, const FormulaPtr& phi) {
  std::map<std::string, TruthIntervalSet> memo;
  return eval_set(sigma, phi, memo);
}

bool sat(const PwlTrace& sigma, const FormulaPtr& phi) {
  return truth_intervals(sigma, phi).contains(0.0);
}

// ---------------------------------------------------------------------------
// Robust semantics

namespace {

PwlFun atom_signal(const PwlTrace& sigma, const LinearPredicate& p) {
  const auto& ts = sigma.knots().times;
  std::vector<double> vs = sigma.knot_margins(p);
  if (ts.size() == 1) return PwlFun::constant(1.0, vs[0]);
  return PwlFun(ts, vs);
}

PwlFun eval_robust(const PwlTrace& sigma, const FormulaPtr& f,
                   std::map<std::string, PwlFun>& memo) {
  std::string key = pretty_print(f);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;

  double T = sigma.horizon();
  PwlFun r = PwlFun::constant(T, 0.0);
  switch (f->kind) {
    case NodeKind::True: r = PwlFun::constant(T, kInf); break;
    case NodeKind::False: r = PwlFun::constant(T, -kInf); break;
    case NodeKind::Atom: r = atom_signal(sigma, f->pred); break;
    case NodeKind::Not:
      r = eval_robust(sigma, f->children[0], memo).negate();
      break;
    case NodeKind::And: {
      r = eval_robust(sigma, f->children[0], memo);
      for (size_t i = 1; i < f->children.size(); ++i)
        r = PwlFun::min2(r, eval_robust(sigma, f->children[i], memo));
      break;
    }
    case NodeKind::Or: {
      r = eval_robust(sigma, f->children[0], memo);
      for (size_t i = 1; i < f->children.size(); ++i)
        r = PwlFun::max2(r, eval_robust(sigma, f->children[i], memo));
      break;
    }
    case NodeKind::Eventually:
      r = eval_robust(sigma, f->children[0], memo)
              .sliding_sup(f->window.lo, f->window.hi);
      break;
    case NodeKind::Always:
      r = eval_robust(sigma, f->children[0], memo)
              .sliding_inf(f->window.lo, f->window.hi);
      break;
    case NodeKind::Until: {
      PwlFun r1 = eval_robust(sigma, f->children[0], memo);
      PwlFun r2 = eval_robust(sigma, f->children[1], memo);
      if (f->window.unbounded()) {
        r = PwlFun::until_unbounded(r1, r2);
      } else {
        // r1 U[a,b] r2 == F[a,b] r2 && G[0,a] (r1 && (r1 U r2)); the r1
        // factor keeps the left operand alive across the head window,
        // matching the satisfaction relation's prefix requirement
        PwlFun ev = r2.sliding_sup(f->window.lo, f->window.hi);
        PwlFun u = PwlFun::until_unbounded(r1, r2);
        PwlFun head = (f->window.lo == 0.0)
                          ? u
                          : PwlFun::min2(r1, u).sliding_inf(0.0, f->window.lo);
        r = PwlFun::min2(ev, head);
      }
      break;
    }
    case NodeKind::Release: {
      PwlFun r1 = eval_robust(sigma, f->children[0], memo).negate();
      PwlFun r2 = eval_robust(sigma, f->children[1], memo).negate();
      PwlFun dual = PwlFun::constant(T, 0.0);
      if (f->window.unbounded()) {
        dual = PwlFun::until_unbounded(r1, r2);
      } else {
        PwlFun ev = r2.sliding_sup(f->window.lo, f->window.hi);
        PwlFun u = PwlFun::until_unbounded(r1, r2);
        PwlFun head = (f->window.lo == 0.0)
                          ? u
                          : PwlFun::min2(r1, u).sliding_inf(0.0, f->window.lo);
        dual = PwlFun::min2(ev, head);
      }
      r = dual.negate();
      break;
    }
  }
  memo.emplace(key, r);
  return r;
}

}  // namespace

PwlFun robustness_signal(const PwlTrace& sigma, const FormulaPtr& phi) {
  std::map<std::string, PwlFun> memo;
  return eval_robust(sigma, phi, memo);
}

double robustness(const PwlTrace& sigma, const FormulaPtr& phi) {
  return robustness_signal(sigma, phi).eval(0.0);
}

// ---------------------------------------------------------------------------
// Conservative valuation check

bool check_conservative_valuation(const PwlTrace& sigma, const FormulaPtr& phi,
                                  const std::vector<double>& gamma,
                                  const Valuation& theta, double delta,
                                  std::string* why) {
  if (gamma.size() < 2) throw std::runtime_error("time sequence needs >= 2 knots");
  std::vector<FormulaPtr> subs = enumerate_subformulas(phi);
  for (const auto& psi : subs) {
    std::string key = pretty_print(psi);
    TruthIntervalSet truth = truth_intervals(sigma, psi);
    TruthIntervalSet tight =
        truth_intervals(sigma, delta_tighten(to_nnf(psi), delta));
    for (int i = 1; i + 0 < static_cast<int>(gamma.size()); ++i) {
      auto it = theta.find({key, i});
      if (it == theta.end()) continue;
      double lo = gamma[i - 1], hi = gamma[i];
      if (it->second) {
        if (!truth.covers(lo, hi)) {
          if (why)
            *why = "Theta(" + key + "," + std::to_string(i) +
                   ")=T but the subformula fails inside the interval";
          return false;
        }
      } else {
        if (!tight.disjoint_from(lo, hi)) {
          if (why)
            *why = "Theta(" + key + "," + std::to_string(i) +
                   ")=F but the tightened subformula holds inside the interval";
          return false;
        }
      }
    }
  }
  return true;
}

}  // namespace stlts
