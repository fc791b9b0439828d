#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "mfswitch/scenario.hpp"

using nlohmann::json;

namespace {

json two_mode_doc() {
  return json::parse(R"({
    "horizon": 1.0,
    "modes": ["a", "b"],
    "velocity": [{"expr": "0"}, {"expr": "0"}],
    "running_cost": [{"expr": "0"}, {"expr": "0"}],
    "terminal_cost": [{"expr": "0"}, {"expr": "1"}],
    "initial_density": [{"expr": "15*s^2*(1-s)^2"}, {"expr": "15*s^2*(1-s)^2"}],
    "capacity": [{"expr": "1.5"}, {"expr": "1.5"}]
  })");
}

double trapz_mass(const mfc::Scenario& sc, int i, int n = 20000) {
  double acc = 0.0;
  for (int q = 0; q <= n; ++q) {
    double w = (q == 0 || q == n) ? 0.5 : 1.0;
    acc += w * sc.initial_density(i, static_cast<double>(q) / n);
  }
  return acc / n;
}

}  // namespace

TEST_CASE("presets load with the documented shapes") {
  mfc::Scenario smart = mfc::preset("smart_charging");
  CHECK(smart.mode_count() == 2);
  CHECK(smart.horizon() == doctest::Approx(1.0));
  CHECK(smart.modes().labels[0] == "idle");
  CHECK(smart.velocity(0, 0.5) == doctest::Approx(-4.0 * std::pow(0.5, 6)));
  CHECK(smart.velocity(1, 0.5) == doctest::Approx(4.0 * std::pow(0.5, 6)));
  CHECK(smart.running_cost(1, 0.25, 0.9) == doctest::Approx(1.5));
  CHECK(smart.terminal_cost(0, 0.0) == doctest::Approx(2.0));
  CHECK(smart.capacity(0, 0.7) == doctest::Approx(1.1));
  CHECK(smart.capacity(1, 0.7) == doctest::Approx(0.6));
  // Idle holds mass 0.8, charging 0.2; total is a probability density.
  CHECK(trapz_mass(smart, 0) == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(trapz_mass(smart, 1) == doctest::Approx(0.2).epsilon(1e-6));

  CHECK(mfc::preset("single_mode").mode_count() == 1);
  CHECK(mfc::preset("symmetric_two_mode").mode_count() == 2);
  CHECK_THROWS_AS(mfc::preset("nope"), mfc::ScenarioDomainError);
}

TEST_CASE("json round-trip preserves field semantics") {
  for (const char* name : {"smart_charging", "single_mode", "symmetric_two_mode"}) {
    mfc::Scenario sc = mfc::preset(name);
    mfc::Scenario back = mfc::Scenario::from_json(sc.to_json());
    REQUIRE(back.mode_count() == sc.mode_count());
    for (int i = 0; i < sc.mode_count(); ++i)
      for (double s : {0.0, 0.3, 0.77, 1.0}) {
        CHECK(back.velocity(i, s) == sc.velocity(i, s));
        CHECK(back.terminal_cost(i, s) == sc.terminal_cost(i, s));
        CHECK(back.initial_density(i, s) == sc.initial_density(i, s));
        CHECK(back.running_cost(i, 0.4, s) == sc.running_cost(i, 0.4, s));
        CHECK(back.capacity(i, 0.4) == sc.capacity(i, 0.4));
      }
  }
}

TEST_CASE("save and load through a file") {
  auto path = std::filesystem::temp_directory_path() / "mfswitch_scenario_rt.json";
  mfc::save_scenario(mfc::preset("smart_charging"), path);
  mfc::Scenario sc = mfc::load_scenario(path);
  CHECK(sc.mode_count() == 2);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(mfc::load_scenario("/nonexistent/sc.json"), mfc::ScenarioParseError);
  std::ofstream(path) << "{not json";
  CHECK_THROWS_AS(mfc::load_scenario(path), mfc::ScenarioParseError);
  std::filesystem::remove(path);
}

TEST_CASE("schema and domain errors carry distinct types") {
  json doc = two_mode_doc();
  doc.erase("velocity");
  CHECK_THROWS_AS(mfc::Scenario::from_json(doc), mfc::ScenarioSchemaError);

  doc = two_mode_doc();
  doc["velocity"] = json::array({json{{"expr", "0"}}});  // one entry, two modes
  CHECK_THROWS_AS(mfc::Scenario::from_json(doc), mfc::ScenarioSchemaError);

  doc = two_mode_doc();
  doc["horizon"] = -1.0;
  CHECK_THROWS_AS(mfc::Scenario::from_json(doc), mfc::ScenarioDomainError);

  doc = two_mode_doc();
  doc["modes"] = json::array();
  for (const char* key : {"velocity", "running_cost", "terminal_cost", "initial_density",
                          "capacity"})
    doc[key] = json::array();
  CHECK_THROWS_AS(mfc::Scenario::from_json(doc), mfc::ScenarioDomainError);

  doc = two_mode_doc();
  doc["velocity"][0] = json{{"expr", "2+"}};
  CHECK_THROWS_AS(mfc::Scenario::from_json(doc), mfc::ScenarioParseError);
}

TEST_CASE("table fields interpolate, extend, and respect the axis flag") {
  json linear = json{{"table", json{{"points", {0.0, 0.5, 1.0}}, {"values", {1.0, 2.0, 3.0}}}}};
  mfc::ScalarField in_s = mfc::ScalarField::from_json(linear, false, false);
  // Natural cubic spline of linear data is that line.
  CHECK(in_s.eval(0.0, 0.25) == doctest::Approx(1.5));
  CHECK(in_s.eval(0.0, 0.9) == doctest::Approx(2.8));
  CHECK(in_s.eval(0.0, -3.0) == doctest::Approx(1.0));  // constant extension
  CHECK(in_s.eval(0.0, 9.0) == doctest::Approx(3.0));

  mfc::ScalarField in_t = mfc::ScalarField::from_json(linear, false, true);
  CHECK(in_t.eval(0.25, 0.77) == doctest::Approx(1.5));  // reads t, ignores s

  mfc::ScalarField zero_out = mfc::ScalarField::from_json(linear, true, false);
  CHECK(zero_out.eval(0.0, 1.5) == doctest::Approx(0.0));
  CHECK(zero_out.eval(0.0, -0.1) == doctest::Approx(0.0));

  json bad = json{{"table", json{{"points", {0.0}}, {"values", {1.0}}}}};
  CHECK_THROWS_AS(mfc::ScalarField::from_json(bad, false, false), mfc::ScenarioSchemaError);
  json unsorted =
      json{{"table", json{{"points", {0.0, 0.7, 0.3}}, {"values", {1.0, 2.0, 3.0}}}}};
  CHECK_THROWS_AS(mfc::ScalarField::from_json(unsorted, false, false),
                  mfc::ScenarioDomainError);
}

TEST_CASE("velocity derivative matches the analytic polynomial") {
  mfc::Scenario sc = mfc::preset("single_mode");
  auto db = [](double s) { return 12.0 * s * s * (1 - s) * (1 - s) * (1 - 2 * s); };
  for (double s : {0.1, 0.3, 0.5, 0.8})
    CHECK(sc.velocity_deriv(0, s) == doctest::Approx(db(s)).epsilon(1e-7));
}

TEST_CASE("validation accepts presets and flags each assumption") {
  mfc::GridSpec grid = mfc::GridSpec::make(16, 16, 1.0);
  for (const char* name : {"smart_charging", "single_mode", "symmetric_two_mode"})
    CHECK(mfc::validate_scenario(mfc::preset(name), grid).empty());

  auto first_assumption = [&](json doc) {
    auto v = mfc::validate_scenario(mfc::Scenario::from_json(doc), grid);
    REQUIRE_FALSE(v.empty());
    return v.front().assumption;
  };

  json doc = two_mode_doc();
  doc["velocity"][0] = json{{"expr", "1"}};  // no boundary zeros
  CHECK(first_assumption(doc) == 1);

  doc = two_mode_doc();
  doc["initial_density"][0] = json{{"expr", "-15*s^2*(1-s)^2"}};  // negative
  CHECK(first_assumption(doc) == 2);

  doc = two_mode_doc();
  doc["initial_density"][0] = json{{"expr", "30*s^2*(1-s)^2"}};  // total mass 1.5
  CHECK(first_assumption(doc) == 2);

  doc = two_mode_doc();
  doc["capacity"][0] = json{{"expr", "0.3"}};  // below initial mode mass 0.5
  CHECK(first_assumption(doc) == 3);

  doc = two_mode_doc();
  doc["running_cost"][0] = json{{"expr", "1/0"}};  // not finite
  CHECK(first_assumption(doc) == 4);
}

TEST_CASE("capacity slack reports the tightest margin") {
  mfc::GridSpec grid = mfc::GridSpec::make(16, 16, 1.0);
  double slack = mfc::capacity_slack(mfc::preset("symmetric_two_mode"), grid);
  CHECK(slack == doctest::Approx(1.0).epsilon(1e-3));
}
