// System-model MILP encodings sharing the time sequence and trace
// variables with the STL encoding: rectangular hybrid automata (exact),
// double integrator dynamics (exact up to the binary expansion of interval
// durations), HAs with sampled closed-form solutions (approximate), and
// the trivial bounds-only model.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stlts/stl_encoder.hpp"

namespace stlts {

using Box = std::map<std::string, std::pair<double, double>>;

struct RhaMode {
  std::string name;
  Box flow;       // per-variable derivative bounds, must cover all variables
  Box invariant;  // may be partial; missing variables are unconstrained
};

struct RhaTransition {
  std::string from, to;
  Box guard;                        // may be partial
  std::vector<std::string> update;  // variables reset by the jump
  Box post;                         // boxes for updated variables
};

struct RectangularHybridAutomaton {
  Box variables;  // global bounds
  std::vector<RhaMode> modes;
  std::vector<RhaTransition> transitions;
  std::vector<std::string> initial_modes;  // empty = any
  Box init;                                // may be partial
};

struct DoubleIntegratorAgent {
  std::string position, velocity, acceleration;
  std::pair<double, double> position_bounds, velocity_bounds, acceleration_bounds;
  std::pair<double, double> initial_position, initial_velocity;
};

struct DoubleIntegratorModel {
  std::vector<DoubleIntegratorAgent> agents;
};

struct ClosedFormMode {
  std::string name;
  // sampled_maps[k] gives, per state variable, the affine map
  // x_v(k*dt) = const + sum coef_in * x_in + sum coef_x0 * x0 evaluated at
  // the mode-entry state and the (mode-constant) inputs.
  struct AffineRow {
    double constant = 0.0;
    std::map<std::string, double> input_coeffs;
    std::map<std::string, double> entry_coeffs;
  };
  std::vector<std::map<std::string, AffineRow>> sampled_maps;
};

struct ClosedFormHA {
  Box state_vars;   // bounds
  Box input_vars;   // bounds
  double dt = 1.0;  // sampling interval, shared by all modes
  std::vector<ClosedFormMode> modes;
  std::vector<RhaTransition> transitions;
  std::vector<std::string> initial_modes;
  Box init;  // over state variables; may be partial
};

struct IdentityModel {
  Box variables;
};

enum class ModelKind { Rha, DoubleIntegrator, ClosedForm, Identity };

struct SystemModel {
  ModelKind kind = ModelKind::Identity;
  double horizon = 0.0;  // default T; CLI may override
  RectangularHybridAutomaton rha;
  DoubleIntegratorModel di;
  ClosedFormHA cf;
  IdentityModel identity;

  std::vector<std::string> variable_names() const;
  void validate() const;
};

SystemModel load_model_json(const std::string& text);
SystemModel load_model_file(const std::string& path);

// Per-interval mode names of a decoded RHA/closed-form trace (empty for
// the other kinds); filled by the encoders' decode hooks.
struct ModelEncodeInfo {
  std::vector<std::string> mode_var_names;  // "mode_<i>_<l>" binaries
};

struct ModelEncoder {
  // Registers all trace variables on ctx and adds the model constraints.
  // beta = bit count for binary expansions (double integrator/closed form).
  static ModelEncodeInfo encode(const SystemModel& m, EncodingContext& ctx, int beta);

  static ModelEncodeInfo encode_rha(const RectangularHybridAutomaton& h,
                                    EncodingContext& ctx);
  static ModelEncodeInfo encode_double_integrator(const DoubleIntegratorModel& m,
                                                  EncodingContext& ctx, int beta);
  static ModelEncodeInfo encode_closed_form(const ClosedFormHA& h,
                                            EncodingContext& ctx, int beta);
  static ModelEncodeInfo encode_identity(const IdentityModel& m, EncodingContext& ctx);
};

}  // namespace stlts
