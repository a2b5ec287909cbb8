// Exact arithmetic on continuous piecewise-linear functions over [0, D].
// These are the robustness signals t -> [[sigma^t, psi]] of PWL traces:
// closed under negation, min/max (with crossing knots inserted), sliding
// window inf/sup, suffix inf/sup, and the unbounded-until combinator.
//
// The constants +/-inf (robustness of true/false) are represented as
// globally constant functions and short-circuited in every operation, so
// finite knot values never mix with infinities.

#pragma once

#include <vector>

namespace stlts {

class PwlFun {
 public:
  // Constant function (value may be +/-infinity).
  static PwlFun constant(double domain_hi, double value);

  // From knots; ts strictly increasing, ts.front() == 0, finite values.
  PwlFun(std::vector<double> ts, std::vector<double> vs);

  double domain_hi() const { return ts_.back(); }
  bool is_constant() const;
  double eval(double t) const;  // clamped (constant) outside [0, D]

  const std::vector<double>& knot_times() const { return ts_; }
  const std::vector<double>& knot_values() const { return vs_; }

  PwlFun negate() const;
  static PwlFun min2(const PwlFun& f, const PwlFun& g);
  static PwlFun max2(const PwlFun& f, const PwlFun& g);

  // sup / inf of f over the sliding window [t+a, t+b] (b may be +inf),
  // with f extended constantly beyond D.
  PwlFun sliding_sup(double a, double b) const;
  PwlFun sliding_inf(double a, double b) const;

  // sup / inf over [t, +inf) under constant extension.
  PwlFun suffix_sup() const;
  PwlFun suffix_inf() const;

  // t -> sup_{s>=0} min( r2(t+s), inf_{t'\in[t,t+s)} r1(t') ) maxed with
  // r2(t), i.e. the robustness of  r1 Until[0,inf) r2.
  static PwlFun until_unbounded(const PwlFun& r1, const PwlFun& r2);

 private:
  PwlFun() = default;
  void compress();  // drop collinear interior knots

  std::vector<double> ts_, vs_;
};

}  // namespace stlts
