// Variable-interval MILP encoding of STL over delta-stable partitions.
//
// The encoding searches simultaneously for a time sequence
// 0 = gamma_0 < ... < gamma_N = T, trace values x_{i,v} at the knots, and
// a conservative valuation <psi>_i of every subformula on every interval
// [gamma_{i-1}, gamma_i]. Atomic truth is linked to the knots through the
// zeta / zeta^delta crossing variables; bounded always/eventually use the
// S/P duration accumulators.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "stlts/formula.hpp"
#include "stlts/milp.hpp"

namespace stlts {

struct EncodingParams {
  int n_intervals = 2;      // N
  double horizon = 0.0;     // T
  double delta = 0.1;
  double epsilon = 1e-4;
};

// Shared variable registry for one encoding: the STL side and the system
// model side both talk through this object.
class EncodingContext {
 public:
  // phi must be normalized: NNF, no bounded until/release, windows valid.
  EncodingContext(FormulaPtr phi, EncodingParams params);

  MilpModel& model() { return model_; }
  const MilpModel& model() const { return model_; }
  const EncodingParams& params() const { return params_; }
  const FormulaPtr& formula() const { return phi_; }
  const std::vector<FormulaPtr>& subformulas() const { return subs_; }

  // gamma_0 = 0, gamma_N = T, gamma_i - gamma_{i-1} >= epsilon.
  void encode_time_sequence();

  VarId gamma(int i) const { return gamma_.at(i); }
  // duration d_i = gamma_i - gamma_{i-1}; created on first use.
  VarId duration(int i);

  // Trace variable registration (model encoders call this); every atom
  // variable must be registered before encode_formula runs.
  void register_trace_var(const std::string& var, double lb, double ub);
  bool has_trace_var(const std::string& var) const;
  VarId trace_var(const std::string& var, int i) const;
  std::vector<std::string> trace_var_names() const;

  // Magnitude parameter as a bounded continuous variable (mining).
  VarId register_param(const std::string& name, double lo, double hi);
  VarId param_var(const std::string& name) const;

  // Valuation variable <psi>_i, i in [1, N].
  VarId valuation(int sub_index, int i) const { return val_.at(sub_index).at(i); }
  int sub_index(const FormulaPtr& f) const;

  void note_symbol(const std::string& var_name, const std::string& meaning);
  std::string symbol_map_json() const;

  int n() const { return params_.n_intervals; }
  double horizon() const { return params_.horizon; }

 private:
  friend struct StlEncoder;
  FormulaPtr phi_;
  EncodingParams params_;
  MilpModel model_;
  std::vector<VarId> gamma_;
  std::vector<VarId> dur_;  // index 1..N, -1 until created
  std::vector<FormulaPtr> subs_;
  std::map<std::string, int> sub_index_;
  std::vector<std::vector<VarId>> val_;  // [sub][i], i in 1..N
  std::map<std::string, std::vector<VarId>> trace_;
  std::map<std::string, VarId> params_vars_;
  std::map<std::string, std::string> symbols_;
};

// The constraint families. encode_formula runs them all plus the
// fulfilling constraint <phi>_1 = 1.
struct StlEncoder {
  static void encode_atomics(EncodingContext& ctx);
  static void encode_boolean(EncodingContext& ctx);
  static void encode_unbounded(EncodingContext& ctx);
  static void encode_bounded_always(EncodingContext& ctx, const FormulaPtr& node);
  static void encode_bounded_eventually(EncodingContext& ctx, const FormulaPtr& node);
  static void encode_formula(EncodingContext& ctx);
};

}  // namespace stlts
