#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfswitch/expression.hpp"
#include "mfswitch/grid.hpp"

namespace mfc {

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Unreadable file or malformed JSON/expression text.
struct ScenarioParseError : ScenarioError {
  using ScenarioError::ScenarioError;
};
// Structurally valid JSON that does not match the scenario schema.
struct ScenarioSchemaError : ScenarioError {
  using ScenarioError::ScenarioError;
};
// Schema-valid input with out-of-domain values (horizon <= 0, no modes, ...).
struct ScenarioDomainError : ScenarioError {
  using ScenarioError::ScenarioError;
};

struct ModeSet {
  std::vector<std::string> labels;
  int count() const { return static_cast<int>(labels.size()); }
};

// One scalar input field for one mode: either a compiled expression in (t,s)
// or a natural cubic spline through tabulated points.  Velocity and initial
// density are extended by zero outside [0,1]; the other fields clamp their
// argument to the tabulated range.
class ScalarField {
 public:
  static ScalarField from_json(const nlohmann::json& spec, bool zero_outside_unit,
                               bool table_axis_is_time);

  double eval(double t, double s) const;
  const nlohmann::json& source() const { return src_; }

 private:
  enum class Kind { Expr, Table };
  Kind kind_ = Kind::Expr;
  Expression expr_;
  std::vector<double> pts_, vals_, m_;  // spline knots, values, second derivatives
  bool zero_outside_unit_ = false;
  bool table_axis_is_time_ = false;
  nlohmann::json src_;

  double eval_table(double x) const;
};

// Immutable problem description: mode set, horizon, and per-mode inputs
// b_i, c_i, g_i, m0_i, D_i.  All accessors are const and thread-safe.
class Scenario {
 public:
  static Scenario from_json(const nlohmann::json& doc);

  double horizon() const { return horizon_; }
  const ModeSet& modes() const { return modes_; }
  int mode_count() const { return modes_.count(); }

  double velocity(int i, double s) const { return velocity_[i].eval(0.0, s); }
  double running_cost(int i, double t, double s) const { return running_cost_[i].eval(t, s); }
  double terminal_cost(int i, double s) const { return terminal_[i].eval(0.0, s); }
  double initial_density(int i, double s) const { return initial_[i].eval(0.0, s); }
  double capacity(int i, double t) const { return capacity_[i].eval(t, 0.0); }

  // Five-point central difference of b_i; h is interior-safe near 0 and 1
  // because b vanishes outside the unit interval anyway.
  double velocity_deriv(int i, double s) const;

  nlohmann::json to_json() const;

 private:
  Scenario() = default;

  double horizon_ = 0.0;
  ModeSet modes_;
  std::vector<ScalarField> velocity_, running_cost_, terminal_, initial_, capacity_;
};

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& sc, const std::filesystem::path& path);

// Built-in scenarios: "smart_charging", "single_mode", "symmetric_two_mode".
Scenario preset(const std::string& name);

struct Violation {
  int assumption = 0;  // 1 velocity, 2 initial density, 3 capacity, 4 costs
  int mode = -1;
  double t = 0.0;
  double s = 0.0;
  std::string detail;
};

// Samples the standing assumptions on `grid` and a 4x refinement of it.
// Returns one entry per detected violation; empty means the scenario is
// usable.  Derivative bounds are checked through divided differences only.
std::vector<Violation> validate_scenario(const Scenario& sc, const GridSpec& grid);

// Minimum over modes and sampled times of D_i(t) - integral of m0_i.
// Positive by Assumption 3; the dual multiplier mass bound scales with 1/slack.
double capacity_slack(const Scenario& sc, const GridSpec& grid);

}  // namespace mfc
