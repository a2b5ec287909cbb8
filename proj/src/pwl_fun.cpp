#include "stlts/pwl_fun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stlts {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTol = 1e-12;
}  // namespace

PwlFun PwlFun::constant(double domain_hi, double value) {
  PwlFun f;
  f.ts_ = {0.0, std::max(domain_hi, 1e-9)};
  f.vs_ = {value, value};
  return f;
}

PwlFun::PwlFun(std::vector<double> ts, std::vector<double> vs)
    : ts_(std::move(ts)), vs_(std::move(vs)) {
  if (ts_.size() < 2 || ts_.size() != vs_.size())
    throw std::runtime_error("PwlFun needs matching knot vectors, size >= 2");
  for (size_t i = 1; i < ts_.size(); ++i)
    if (!(ts_[i] > ts_[i - 1]))
      throw std::runtime_error("PwlFun knots must be strictly increasing");
  for (double v : vs_)
    if (std::isnan(v)) throw std::runtime_error("PwlFun value is NaN");
  compress();
}

bool PwlFun::is_constant() const {
  for (size_t i = 1; i < vs_.size(); ++i)
    if (vs_[i] != vs_[0]) return false;
  return true;
}

double PwlFun::eval(double t) const {
  if (t <= ts_.front()) return vs_.front();
  if (t >= ts_.back()) return vs_.back();
  auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
  size_t i = it - ts_.begin() - 1;
  double t0 = ts_[i], t1 = ts_[i + 1];
  double lam = (t - t0) / (t1 - t0);
  return (1.0 - lam) * vs_[i] + lam * vs_[i + 1];
}

void PwlFun::compress() {
  if (ts_.size() <= 2) return;
  std::vector<double> ts{ts_[0]};
  std::vector<double> vs{vs_[0]};
  for (size_t i = 1; i + 1 < ts_.size(); ++i) {
    double t0 = ts.back(), v0 = vs.back();
    double t2 = ts_[i + 1], v2 = vs_[i + 1];
    double interp = v0 + (v2 - v0) * (ts_[i] - t0) / (t2 - t0);
    if (std::abs(interp - vs_[i]) > kTol * (1.0 + std::abs(vs_[i]))) {
      ts.push_back(ts_[i]);
      vs.push_back(vs_[i]);
    }
  }
  ts.push_back(ts_.back());
  vs.push_back(vs_.back());
  ts_ = std::move(ts);
  vs_ = std::move(vs);
}

PwlFun PwlFun::negate() const {
  PwlFun f = *this;
  for (double& v : f.vs_) v = -v;
  return f;
}

// Merged knot grid of f and g with exact crossing points inserted, so that
// min/max of the two is linear between consecutive grid points.
static std::vector<double> merged_grid(const PwlFun& f, const PwlFun& g) {
  std::vector<double> ts;
  ts.reserve(f.knot_times().size() + g.knot_times().size());
  std::merge(f.knot_times().begin(), f.knot_times().end(), g.knot_times().begin(),
             g.knot_times().end(), std::back_inserter(ts));
  ts.erase(std::unique(ts.begin(), ts.end(),
                       [](double a, double b) { return std::abs(a - b) <= kTol; }),
           ts.end());
  std::vector<double> out;
  for (size_t i = 0; i + 1 < ts.size(); ++i) {
    out.push_back(ts[i]);
    double d0 = f.eval(ts[i]) - g.eval(ts[i]);
    double d1 = f.eval(ts[i + 1]) - g.eval(ts[i + 1]);
    if ((d0 > kTol && d1 < -kTol) || (d0 < -kTol && d1 > kTol)) {
      double t = ts[i] + (ts[i + 1] - ts[i]) * d0 / (d0 - d1);
      if (t > ts[i] + kTol && t < ts[i + 1] - kTol) out.push_back(t);
    }
  }
  out.push_back(ts.back());
  return out;
}

PwlFun PwlFun::min2(const PwlFun& f, const PwlFun& g) {
  if (f.is_constant() && std::isinf(f.vs_[0])) return f.vs_[0] > 0 ? g : f;
  if (g.is_constant() && std::isinf(g.vs_[0])) return g.vs_[0] > 0 ? f : g;
  std::vector<double> ts = merged_grid(f, g);
  std::vector<double> vs;
  vs.reserve(ts.size());
  for (double t : ts) vs.push_back(std::min(f.eval(t), g.eval(t)));
  return PwlFun(std::move(ts), std::move(vs));
}

PwlFun PwlFun::max2(const PwlFun& f, const PwlFun& g) {
  if (f.is_constant() && std::isinf(f.vs_[0])) return f.vs_[0] > 0 ? f : g;
  if (g.is_constant() && std::isinf(g.vs_[0])) return g.vs_[0] > 0 ? g : f;
  std::vector<double> ts = merged_grid(f, g);
  std::vector<double> vs;
  vs.reserve(ts.size());
  for (double t : ts) vs.push_back(std::max(f.eval(t), g.eval(t)));
  return PwlFun(std::move(ts), std::move(vs));
}

// Upper/lower envelope of line segments over one cell [t0, t1]; each
// candidate is (value at t0, value at t1). Appends breakpoints to ts/vs.
static void append_envelope(std::vector<double>& ts, std::vector<double>& vs,
                            double t0, double t1,
                            const std::vector<std::pair<double, double>>& lines,
                            bool upper) {
  std::vector<double> bps{t0, t1};
  for (size_t i = 0; i < lines.size(); ++i)
    for (size_t j = i + 1; j < lines.size(); ++j) {
      double d0 = lines[i].first - lines[j].first;
      double d1 = lines[i].second - lines[j].second;
      if ((d0 > kTol && d1 < -kTol) || (d0 < -kTol && d1 > kTol)) {
        double t = t0 + (t1 - t0) * d0 / (d0 - d1);
        if (t > t0 + kTol && t < t1 - kTol) bps.push_back(t);
      }
    }
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end(),
                        [](double a, double b) { return std::abs(a - b) <= kTol; }),
            bps.end());
  for (double t : bps) {
    double lam = (t1 > t0) ? (t - t0) / (t1 - t0) : 0.0;
    double best = upper ? -kInf : kInf;
    for (const auto& [v0, v1] : lines) {
      double v = (1.0 - lam) * v0 + lam * v1;
      best = upper ? std::max(best, v) : std::min(best, v);
    }
    if (!ts.empty() && t <= ts.back() + kTol) {
      continue;  // duplicate boundary; values agree by continuity
    }
    ts.push_back(t);
    vs.push_back(best);
  }
}

PwlFun PwlFun::sliding_sup(double a, double b) const {
  if (is_constant()) return *this;
  double D = domain_hi();

  if (std::isinf(b)) {
    // sup over [t+a, inf) = (suffix sup)(t+a), clamped at D
    PwlFun s = suffix_sup();
    if (a == 0.0) return s;
    std::vector<double> ts{0.0};
    std::vector<double> vs{s.eval(std::min(a, D))};
    for (double k : s.knot_times()) {
      double t = k - a;
      if (t > kTol && t < D - kTol) {
        ts.push_back(t);
        vs.push_back(s.eval(k));
      }
    }
    if (ts.back() < D - kTol) {
      ts.push_back(D);
      vs.push_back(s.eval(D));
    }
    return PwlFun(std::move(ts), std::move(vs));
  }

  // cell boundaries: shifted knots and clamp switches
  std::vector<double> cands{0.0, D};
  for (double k : ts_)
    for (double s : {k - a, k - b})
      if (s > kTol && s < D - kTol) cands.push_back(s);
  for (double s : {D - a, D - b})
    if (s > kTol && s < D - kTol) cands.push_back(s);
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end(),
                          [](double x, double y) { return std::abs(x - y) <= kTol; }),
              cands.end());

  std::vector<double> ts, vs;
  for (size_t i = 0; i + 1 < cands.size(); ++i) {
    double t0 = cands[i], t1 = cands[i + 1];
    auto wlo = [&](double t) { return std::min(t + a, D); };
    auto whi = [&](double t) { return std::min(t + b, D); };
    double tm = 0.5 * (t0 + t1);
    double interior = -kInf;
    for (size_t j = 0; j < ts_.size(); ++j)
      if (ts_[j] > wlo(tm) + kTol && ts_[j] < whi(tm) - kTol)
        interior = std::max(interior, vs_[j]);
    std::vector<std::pair<double, double>> lines;
    lines.push_back({eval(wlo(t0)), eval(wlo(t1))});
    lines.push_back({eval(whi(t0)), eval(whi(t1))});
    if (interior > -kInf) lines.push_back({interior, interior});
    append_envelope(ts, vs, t0, t1, lines, /*upper=*/true);
  }
  return PwlFun(std::move(ts), std::move(vs));
}

PwlFun PwlFun::sliding_inf(double a, double b) const {
  return negate().sliding_sup(a, b).negate();
}

PwlFun PwlFun::suffix_sup() const {
  if (is_constant()) return *this;
  // right-to-left sweep: over [t0, t1], sup over [t, inf) equals
  // max(f(t), C) with C = max(f(t1), sup over [t1, inf))
  std::vector<double> rts, rvs;  // reversed knot list
  double running = vs_.back();
  rts.push_back(ts_.back());
  rvs.push_back(running);
  for (size_t i = ts_.size() - 1; i-- > 0;) {
    double t0 = ts_[i], t1 = ts_[i + 1];
    double v0 = vs_[i], v1 = vs_[i + 1];
    double C = std::max(v1, running);
    if (v0 > C + kTol) {
      if (v1 < C - kTol) {
        double tc = t0 + (t1 - t0) * (v0 - C) / (v0 - v1);
        if (tc > t0 + kTol && tc < t1 - kTol) {
          rts.push_back(tc);
          rvs.push_back(C);
        }
      }
      rts.push_back(t0);
      rvs.push_back(v0);
      running = std::max(running, v0);
    } else {
      rts.push_back(t0);
      rvs.push_back(C);
      running = C;
    }
  }
  std::vector<double> ts, vs;
  for (size_t i = rts.size(); i-- > 0;) {
    if (!ts.empty() && rts[i] <= ts.back() + kTol) continue;
    ts.push_back(rts[i]);
    vs.push_back(rvs[i]);
  }
  if (ts.size() < 2) return PwlFun::constant(domain_hi(), rvs.front());
  return PwlFun(std::move(ts), std::move(vs));
}

PwlFun PwlFun::suffix_inf() const { return negate().suffix_sup().negate(); }

static PwlFun line_on(double t0, double t1, double v0, double v1) {
  return PwlFun({t0, t1}, {v0, v1});
}

PwlFun PwlFun::until_unbounded(const PwlFun& r1, const PwlFun& r2) {
  if (r2.is_constant() && std::isinf(r2.knot_values()[0])) return r2;
  if (r1.is_constant() && std::isinf(r1.knot_values()[0])) {
    if (r1.knot_values()[0] > 0) return r2.suffix_sup();  // true U r2
    return r2;                                            // false U r2
  }

  double D = std::max(r1.domain_hi(), r2.domain_hi());
  std::vector<double> grid = merged_grid(r1, r2);
  if (grid.front() > 0.0) grid.insert(grid.begin(), 0.0);
  if (grid.back() < D) grid.push_back(D);
  size_t m = grid.size();

  // U_cl(t) = sup_{s >= 0, witnesses in [t, D]} min(r2(t+s), min r1 over
  // [t, t+s]); the s = 0 half-open correction is applied at the end.
  // Backward induction; per cell everything is an envelope of lines.
  std::vector<double> rts, rvs;  // reversed
  double u_next = std::min(r2.eval(D), r1.eval(D));
  rts.push_back(grid[m - 1]);
  rvs.push_back(u_next);

  for (size_t i = m - 1; i-- > 0;) {
    double t0 = grid[i], t1 = grid[i + 1];
    double a0 = r1.eval(t0), a1 = r1.eval(t1);
    double b0 = r2.eval(t0), b1 = r2.eval(t1);

    PwlFun aseg = line_on(t0, t1, a0, a1);
    // carry-over witness: B(t) = min( inf r1 over [t, t1], U_cl(t1) )
    double cap = std::min(a1, u_next);
    PwlFun B = min2(aseg, line_on(t0, t1, cap, cap));
    PwlFun A = line_on(t0, t1, 0, 0);
    if (a1 >= a0) {
      // r1 non-decreasing on the cell: inf over [t, s] is r1(t), so
      // A(t) = min( sup_{s in [t,t1]} r2(s), r1(t) )
      PwlFun bsup = line_on(t0, t1, b0, b1).suffix_sup();
      A = min2(bsup, aseg);
    } else {
      // r1 decreasing: inf over [t, s] is r1(s); witness value is
      // h(s) = min(r1, r2)(s), so A(t) = sup_{s in [t,t1]} h(s)
      PwlFun h = min2(aseg, line_on(t0, t1, b0, b1));
      A = h.suffix_sup();
    }
    PwlFun u_cell = max2(A, B);
    const auto& cts = u_cell.knot_times();
    const auto& cvs = u_cell.knot_values();
    for (size_t k = cts.size(); k-- > 0;) {
      if (cts[k] >= rts.back() - kTol) {
        rvs.back() = std::max(rvs.back(), cvs[k]);
        continue;
      }
      rts.push_back(cts[k]);
      rvs.push_back(cvs[k]);
    }
    u_next = u_cell.eval(t0);
  }

  std::vector<double> ts, vs;
  for (size_t i = rts.size(); i-- > 0;) {
    if (!ts.empty() && rts[i] <= ts.back() + kTol) continue;
    ts.push_back(rts[i]);
    vs.push_back(rvs[i]);
  }
  PwlFun u_cl = (ts.size() >= 2) ? PwlFun(std::move(ts), std::move(vs))
                                 : PwlFun::constant(D, rvs.front());
  // the s = 0 witness carries no r1 requirement (inf over empty set)
  return max2(r2, u_cl);
}

}  // namespace stlts
