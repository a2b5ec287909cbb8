// Timed state sequences and the piecewise-linear signals they induce.
// A trace is defined on [0, T] by linear interpolation between knots and
// extended constantly beyond T (sigma(t) := sigma(T) for t > T).

#pragma once

#include <map>
#include <string>
#include <vector>

#include "stlts/formula.hpp"

namespace stlts {

using State = std::map<std::string, double>;

// Comparison tolerance for exact-crossing computations. Kept well below
// the encoding's slack constants (epsilon, delta).
inline constexpr double kTimeTol = 1e-9;

struct TimedStateSequence {
  std::vector<double> times;   // strictly increasing, times[0] == 0
  std::vector<State> states;   // same variable set at every knot

  size_t size() const { return times.size(); }
  void validate() const;       // throws on malformed sequences
};

class PwlTrace {
 public:
  PwlTrace() = default;
  explicit PwlTrace(TimedStateSequence seq);

  double horizon() const { return seq_.times.back(); }
  const TimedStateSequence& knots() const { return seq_; }
  const std::vector<std::string>& variables() const { return vars_; }

  // Linear interpolation for t in [0, T]; constant extension beyond T.
  State value_at(double t) const;
  double value_at(double t, const std::string& var) const;

  // Signed margin of predicate p along the trace at time t.
  double margin_at(const LinearPredicate& p, double t) const;

  // Margins of p at the knots, in knot order.
  std::vector<double> knot_margins(const LinearPredicate& p) const;

  // All t in (0, T) where the margin of p crosses 0 or crosses delta,
  // exact per linear segment; sorted and deduplicated. Segments lying
  // on a level contribute no isolated crossing.
  std::vector<double> crossing_times(const LinearPredicate& p, double delta) const;

 private:
  size_t segment_index(double t) const;

  TimedStateSequence seq_;
  std::vector<std::string> vars_;
};

// CSV round-trip: header "time,var1,var2,...", one row per knot.
std::string trace_to_csv(const PwlTrace& trace);
PwlTrace trace_from_csv(const std::string& text);

// JSON round-trip: { "times": [...], "states": [{...}, ...] }.
std::string trace_to_json(const PwlTrace& trace);
PwlTrace trace_from_json(const std::string& text);

PwlTrace load_trace_file(const std::string& path);   // by extension
void save_trace_file(const PwlTrace& trace, const std::string& path);

}  // namespace stlts
