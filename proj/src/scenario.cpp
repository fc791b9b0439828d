#include "mfswitch/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace mfc {

namespace {

// Natural cubic spline second derivatives via the standard tridiagonal solve.
std::vector<double> spline_second_derivs(const std::vector<double>& x,
                                         const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  std::vector<double> m(n, 0.0);
  if (n < 3) return m;
  std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
  for (int i = 1; i < n - 1; ++i) {
    double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
    a[i] = h0 / 6.0;
    b[i] = (h0 + h1) / 3.0;
    c[i] = h1 / 6.0;
    d[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
  }
  // Thomas algorithm on rows 1..n-2 with m[0] = m[n-1] = 0.
  for (int i = 2; i < n - 1; ++i) {
    double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  for (int i = n - 2; i >= 1; --i)
    m[i] = (d[i] - c[i] * (i + 1 < n - 1 ? m[i + 1] : 0.0)) / b[i];
  return m;
}

const char* kSmartCharging = R"json({
  "horizon": 1.0,
  "modes": ["idle", "charging"],
  "velocity": [
    {"expr": "-4*s^3*(1-s)^3"},
    {"expr": "4*s^3*(1-s)^3"}
  ],
  "running_cost": [
    {"expr": "0"},
    {"expr": "1 + 0.5*sin(6.283185307179586*t)"}
  ],
  "terminal_cost": [
    {"expr": "2*(1-s)"},
    {"expr": "2*(1-s)"}
  ],
  "initial_density": [
    {"expr": "24*s^2*(1-s)^2"},
    {"expr": "6*s^2*(1-s)^2"}
  ],
  "capacity": [
    {"expr": "1.1"},
    {"expr": "0.6"}
  ]
})json";

const char* kSingleMode = R"json({
  "horizon": 1.0,
  "modes": ["fleet"],
  "velocity": [
    {"expr": "4*s^3*(1-s)^3"}
  ],
  "running_cost": [
    {"expr": "0"}
  ],
  "terminal_cost": [
    {"expr": "2*(1-s)"}
  ],
  "initial_density": [
    {"expr": "30*s^2*(1-s)^2"}
  ],
  "capacity": [
    {"expr": "1.5"}
  ]
})json";

const char* kSymmetricTwoMode = R"json({
  "horizon": 1.0,
  "modes": ["low", "high"],
  "velocity": [
    {"expr": "0"},
    {"expr": "0"}
  ],
  "running_cost": [
    {"expr": "0"},
    {"expr": "0"}
  ],
  "terminal_cost": [
    {"expr": "0"},
    {"expr": "1"}
  ],
  "initial_density": [
    {"expr": "15*s^2*(1-s)^2"},
    {"expr": "15*s^2*(1-s)^2"}
  ],
  "capacity": [
    {"expr": "1.5"},
    {"expr": "1.5"}
  ]
})json";

bool all_finite_row(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

ScalarField ScalarField::from_json(const nlohmann::json& spec, bool zero_outside_unit,
                                   bool table_axis_is_time) {
  ScalarField f;
  f.src_ = spec;
  f.zero_outside_unit_ = zero_outside_unit;
  f.table_axis_is_time_ = table_axis_is_time;
  if (!spec.is_object())
    throw ScenarioSchemaError("field spec must be an object with 'expr' or 'table'");
  if (spec.contains("expr")) {
    if (!spec["expr"].is_string()) throw ScenarioSchemaError("'expr' must be a string");
    f.kind_ = Kind::Expr;
    try {
      f.expr_ = Expression::parse(spec["expr"].get<std::string>());
    } catch (const ExpressionError& e) {
      throw ScenarioParseError(std::string("expression: ") + e.what());
    }
    return f;
  }
  if (spec.contains("table")) {
    const auto& tab = spec["table"];
    if (!tab.is_object() || !tab.contains("points") || !tab.contains("values"))
      throw ScenarioSchemaError("'table' needs 'points' and 'values' arrays");
    f.kind_ = Kind::Table;
    f.pts_ = tab["points"].get<std::vector<double>>();
    f.vals_ = tab["values"].get<std::vector<double>>();
    if (f.pts_.size() != f.vals_.size() || f.pts_.size() < 2)
      throw ScenarioSchemaError("'table' needs >= 2 points matching values");
    if (!std::is_sorted(f.pts_.begin(), f.pts_.end()))
      throw ScenarioDomainError("'table' points must be increasing");
    if (!all_finite_row(f.pts_) || !all_finite_row(f.vals_))
      throw ScenarioDomainError("'table' entries must be finite");
    f.m_ = spline_second_derivs(f.pts_, f.vals_);
    return f;
  }
  throw ScenarioSchemaError("field spec needs 'expr' or 'table'");
}

double ScalarField::eval_table(double x) const {
  if (zero_outside_unit_ && (x < 0.0 || x > 1.0)) return 0.0;
  // Constant extension beyond the knot range.
  if (x <= pts_.front()) return vals_.front();
  if (x >= pts_.back()) return vals_.back();
  auto it = std::upper_bound(pts_.begin(), pts_.end(), x);
  int j = static_cast<int>(it - pts_.begin()) - 1;
  double h = pts_[j + 1] - pts_[j];
  double A = (pts_[j + 1] - x) / h, B = (x - pts_[j]) / h;
  return A * vals_[j] + B * vals_[j + 1] +
         ((A * A * A - A) * m_[j] + (B * B * B - B) * m_[j + 1]) * h * h / 6.0;
}

double ScalarField::eval(double t, double s) const {
  if (kind_ == Kind::Expr) {
    if (zero_outside_unit_ && (s < 0.0 || s > 1.0)) return 0.0;
    return expr_.eval(t, s);
  }
  return eval_table(table_axis_is_time_ ? t : s);
}

double Scenario::velocity_deriv(int i, double s) const {
  const double h = 1e-4;
  return (velocity(i, s - 2 * h) - 8 * velocity(i, s - h) + 8 * velocity(i, s + h) -
          velocity(i, s + 2 * h)) /
         (12 * h);
}

namespace {

std::vector<ScalarField> parse_field_array(const nlohmann::json& doc, const char* key,
                                           int modes, bool zero_outside_unit,
                                           bool table_axis_is_time) {
  if (!doc.contains(key))
    throw ScenarioSchemaError(std::string("missing '") + key + "'");
  const auto& arr = doc[key];
  if (!arr.is_array() || static_cast<int>(arr.size()) != modes)
    throw ScenarioSchemaError(std::string("'") + key + "' must list one entry per mode");
  std::vector<ScalarField> out;
  out.reserve(modes);
  for (const auto& spec : arr)
    out.push_back(ScalarField::from_json(spec, zero_outside_unit, table_axis_is_time));
  return out;
}

}  // namespace

Scenario Scenario::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ScenarioSchemaError("scenario document must be an object");
  if (!doc.contains("horizon") || !doc["horizon"].is_number())
    throw ScenarioSchemaError("missing numeric 'horizon'");
  if (!doc.contains("modes") || !doc["modes"].is_array())
    throw ScenarioSchemaError("missing 'modes' array");

  Scenario sc;
  sc.horizon_ = doc["horizon"].get<double>();
  if (!(sc.horizon_ > 0.0)) throw ScenarioDomainError("horizon must be positive");
  for (const auto& label : doc["modes"]) {
    if (!label.is_string()) throw ScenarioSchemaError("mode labels must be strings");
    sc.modes_.labels.push_back(label.get<std::string>());
  }
  const int n = sc.mode_count();
  if (n < 1) throw ScenarioDomainError("at least one mode required");

  sc.velocity_ = parse_field_array(doc, "velocity", n, /*zero_outside=*/true, false);
  sc.running_cost_ = parse_field_array(doc, "running_cost", n, false, /*axis=t*/ true);
  sc.terminal_ = parse_field_array(doc, "terminal_cost", n, false, false);
  sc.initial_ = parse_field_array(doc, "initial_density", n, /*zero_outside=*/true, false);
  sc.capacity_ = parse_field_array(doc, "capacity", n, false, /*axis=t*/ true);
  return sc;
}

nlohmann::json Scenario::to_json() const {
  nlohmann::json doc;
  doc["horizon"] = horizon_;
  doc["modes"] = modes_.labels;
  auto dump = [&](const char* key, const std::vector<ScalarField>& fields) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : fields) arr.push_back(f.source());
    doc[key] = arr;
  };
  dump("velocity", velocity_);
  dump("running_cost", running_cost_);
  dump("terminal_cost", terminal_);
  dump("initial_density", initial_);
  dump("capacity", capacity_);
  return doc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioParseError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioParseError(std::string("json: ") + e.what());
  }
  return Scenario::from_json(doc);
}

void save_scenario(const Scenario& sc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ScenarioParseError("cannot write " + path.string());
  out << sc.to_json().dump(2) << '\n';
}

Scenario preset(const std::string& name) {
  const char* doc = nullptr;
  if (name == "smart_charging") doc = kSmartCharging;
  else if (name == "single_mode") doc = kSingleMode;
  else if (name == "symmetric_two_mode") doc = kSymmetricTwoMode;
  else throw ScenarioDomainError("unknown preset '" + name + "'");
  return Scenario::from_json(nlohmann::json::parse(doc));
}

namespace {

// Trapezoid integral of f over [0,1] at resolution n.
template <typename F>
double trapz01(F&& f, int n) {
  double acc = 0.5 * (f(0.0) + f(1.0));
  for (int m = 1; m < n; ++m) acc += f(static_cast<double>(m) / n);
  return acc / n;
}

}  // namespace

std::vector<Violation> validate_scenario(const Scenario& sc, const GridSpec& grid) {
  std::vector<Violation> out;
  const int n = sc.mode_count();
  const int nsr = grid.ns * 4;
  const int ntr = grid.nt * 4;
  const double T = sc.horizon();

  if (std::abs(T - grid.horizon) > 1e-12)
    out.push_back({0, -1, 0, 0, "grid horizon differs from scenario horizon"});

  for (int i = 0; i < n; ++i) {
    // Assumption on the drift: continuous extension by zero, finite samples.
    for (double s : {0.0, 1.0}) {
      double b = sc.velocity(i, s);
      if (std::abs(b) > 1e-9)
        out.push_back({1, i, 0, s, "velocity does not vanish at the boundary"});
    }
    for (int m = 0; m <= nsr; ++m) {
      double s = static_cast<double>(m) / nsr;
      if (!std::isfinite(sc.velocity(i, s)) || !std::isfinite(sc.velocity_deriv(i, s))) {
        out.push_back({1, i, 0, s, "velocity sample not finite"});
        break;
      }
    }
    for (double s : {-0.25, -0.01, 1.01, 1.25}) {
      if (std::abs(sc.velocity(i, s)) > 1e-12)
        out.push_back({1, i, 0, s, "velocity nonzero outside the unit interval"});
    }

    // Initial density: nonnegative, C1 extension requires boundary zeros.
    for (int m = 0; m <= nsr; ++m) {
      double s = static_cast<double>(m) / nsr;
      double v = sc.initial_density(i, s);
      if (!std::isfinite(v)) {
        out.push_back({2, i, 0, s, "initial density sample not finite"});
        break;
      }
      if (v < -1e-12) {
        out.push_back({2, i, 0, s, "initial density negative"});
        break;
      }
    }
    for (double s : {0.0, 1.0})
      if (std::abs(sc.initial_density(i, s)) > 1e-9)
        out.push_back({2, i, 0, s, "initial density must vanish at the boundary"});

    // Costs: finite samples, finite divided differences.
    for (int k = 0; k <= ntr; ++k) {
      double t = T * k / ntr;
      for (int m = 0; m <= nsr; ++m) {
        double s = static_cast<double>(m) / nsr;
        if (!std::isfinite(sc.running_cost(i, t, s))) {
          out.push_back({4, i, t, s, "running cost sample not finite"});
          k = ntr;  // one report per mode is enough
          break;
        }
      }
    }
    for (int m = 0; m <= nsr; ++m) {
      double s = static_cast<double>(m) / nsr;
      if (!std::isfinite(sc.terminal_cost(i, s))) {
        out.push_back({4, i, T, s, "terminal cost sample not finite"});
        break;
      }
    }
  }

  // Total initial mass: Richardson-extrapolated trapezoid.  The probe
  // resolution has a floor so coarse run grids do not fail the 1e-6 bar on
  // quadrature error alone.
  double mass2 = 0.0, mass4 = 0.0;
  for (int i = 0; i < n; ++i) {
    auto f = [&](double s) { return sc.initial_density(i, s); };
    mass2 += trapz01(f, std::max(grid.ns * 2, 2048));
    mass4 += trapz01(f, std::max(nsr, 4096));
  }
  double mass = (4.0 * mass4 - mass2) / 3.0;
  if (std::abs(mass - 1.0) > 1e-6)
    out.push_back({2, -1, 0, 0, "total initial mass is " + std::to_string(mass)});

  // Capacity slack at every sampled time.
  for (int i = 0; i < n; ++i) {
    double mi = trapz01([&](double s) { return sc.initial_density(i, s); }, nsr);
    for (int k = 0; k <= ntr; ++k) {
      double t = T * k / ntr;
      double D = sc.capacity(i, t);
      if (!std::isfinite(D)) {
        out.push_back({3, i, t, 0, "capacity sample not finite"});
        break;
      }
      if (D - mi <= 0.0) {
        out.push_back({3, i, t, 0, "capacity does not exceed initial mode mass"});
        break;
      }
    }
  }
  return out;
}

double capacity_slack(const Scenario& sc, const GridSpec& grid) {
  const int nsr = grid.ns * 4;
  const int ntr = grid.nt * 4;
  double slack = std::numeric_limits<double>::infinity();
  for (int i = 0; i < sc.mode_count(); ++i) {
    double mi = trapz01([&](double s) { return sc.initial_density(i, s); }, nsr);
    for (int k = 0; k <= ntr; ++k) {
      double t = sc.horizon() * k / ntr;
      slack = std::min(slack, sc.capacity(i, t) - mi);
    }
  }
  return slack;
}

}  // namespace mfc
