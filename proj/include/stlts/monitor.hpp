// Exact continuous-time STL evaluation on piecewise-linear traces: the
// independent oracle used to validate every solver output.
//
// Boolean truth sets are finite unions of intervals over [0, T] with exact
// open/closed endpoint bookkeeping. Unbounded-future operators evaluate the
// trace under the constant-extension convention sigma(t) = sigma(T), t > T.
// Robust semantics is computed exactly on the PwlFun class.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "stlts/formula.hpp"
#include "stlts/pwl_fun.hpp"
#include "stlts/signal.hpp"

namespace stlts {

struct TruthInterval {
  double lo = 0.0;
  bool lo_closed = true;
  double hi = 0.0;
  bool hi_closed = true;
};

// Sorted, pairwise disjoint, non-adjacent after normalization.
class TruthIntervalSet {
 public:
  TruthIntervalSet() = default;
  static TruthIntervalSet empty();
  static TruthIntervalSet full(double hi);

  const std::vector<TruthInterval>& items() const { return items_; }
  bool contains(double t) const;
  bool is_empty() const { return items_.empty(); }

  // Whole closed interval [lo, hi] contained (endpoints allowed to slip by
  // the comparison tolerance).
  bool covers(double lo, double hi) const;
  // No point of the closed interval [lo, hi] in the set (again tolerant at
  // endpoints).
  bool disjoint_from(double lo, double hi) const;

  void add(TruthInterval iv);
  void normalize();

  static TruthIntervalSet unite(const TruthIntervalSet& a, const TruthIntervalSet& b);
  static TruthIntervalSet intersect(const TruthIntervalSet& a, const TruthIntervalSet& b);
  // Complement within [0, hi].
  static TruthIntervalSet complement(const TruthIntervalSet& a, double hi);

  std::string to_json() const;

 private:
  std::vector<TruthInterval> items_;
};

// { t in [0,T] : sigma^t |= phi }, computed bottom-up and exactly.
// phi may contain Not nodes (it need not be in NNF).
TruthIntervalSet truth_intervals(const PwlTrace& sigma, const FormulaPtr& phi);

// sigma |= phi, i.e. 0 is in the truth set.
bool sat(const PwlTrace& sigma, const FormulaPtr& phi);

// [[sigma, phi]]: robust semantics at t = 0 (may be +/-infinity).
double robustness(const PwlTrace& sigma, const FormulaPtr& phi);

// The full robustness signal t -> [[sigma^t, phi]] on [0, T].
PwlFun robustness_signal(const PwlTrace& sigma, const FormulaPtr& phi);

// A valuation of the subformulas of phi over the intervals of a time
// sequence Gamma = (gamma_0 < ... < gamma_N). Key = canonical printed form
// of the subformula, index i in [1, N].
using Valuation = std::map<std::pair<std::string, int>, bool>;

// Checks conservativity: Theta(psi, i) = true implies psi holds throughout
// Gamma_i, and Theta(psi, i) = false implies the delta-tightened psi holds
// nowhere in Gamma_i. Entries for subformulas not in Sub(phi) are ignored.
bool check_conservative_valuation(const PwlTrace& sigma, const FormulaPtr& phi,
                                  const std::vector<double>& gamma,
                                  const Valuation& theta, double delta,
                                  std::string* why = nullptr);

}  // namespace stlts
