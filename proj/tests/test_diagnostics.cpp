#include <doctest.h>

#include <cmath>
#include <limits>

#include "mfswitch/diagnostics.hpp"
#include "mfswitch/dual_ascent.hpp"
#include "mfswitch/fokker_planck.hpp"
#include "mfswitch/hjb.hpp"
#include "mfswitch/scenario.hpp"

TEST_CASE("switching effort is quadratic on admissible rates only") {
  CHECK(mfc::running_cost_L(0.0) == 0.0);
  CHECK(mfc::running_cost_L(3.0) == doctest::Approx(4.5));
  CHECK(std::isinf(mfc::running_cost_L(-1e-9)));
}

TEST_CASE("primal cost matches a hand quadrature on constant data") {
  // Constant density and control fields make every trapezoid sum exact:
  //   cost = int int L(2) m_0 ds dt + int g_1 m_1(T) ds.
  mfc::GridSpec grid = mfc::GridSpec::make(8, 8, 1.0);
  mfc::Scenario sc = mfc::preset("symmetric_two_mode");
  mfc::DensityField m(2, grid);
  mfc::ControlField alpha(2, grid);
  for (int k = 0; k <= grid.nt; ++k)
    for (int q = 0; q <= grid.ns; ++q) {
      m.at(0, k, q) = 0.25;
      m.at(1, k, q) = 0.75;
      alpha.at(0, 1, k, q) = 2.0;
    }
  // symmetric_two_mode has c = 0 and g = (0, 1): cost = L(2)*0.25 + 1*0.75.
  CHECK(mfc::primal_cost(m, alpha, sc) == doctest::Approx(2.0 * 0.25 + 0.75).epsilon(1e-12));
  alpha.at(0, 1, 3, 4) = -0.5;
  CHECK_THROWS_AS(mfc::primal_cost(m, alpha, sc), mfc::InfeasibleControl);
}

TEST_CASE("gap and kinetic energy reductions") {
  CHECK(mfc::duality_gap(1.25, -1.2) == doctest::Approx(0.05));
  mfc::GridSpec grid = mfc::GridSpec::make(4, 4, 1.0);
  mfc::DensityField m(2, grid);
  mfc::ControlField alpha(2, grid);
  for (int k = 0; k <= grid.nt; ++k)
    for (int q = 0; q <= grid.ns; ++q) {
      m.at(0, k, q) = 1.0;
      alpha.at(0, 1, k, q) = 3.0;
    }
  CHECK(mfc::kinetic_gamma(m, alpha) == doctest::Approx(4.5).epsilon(1e-12));
}

TEST_CASE("solve report round-trips through json with fixed field names") {
  mfc::SolveReport r;
  r.primal_cost = 1.5;
  r.dual_value = -1.4;
  r.gap = 0.1;
  r.comp_resid = 1e-9;
  r.hjb_resid = 2e-11;
  r.fp_mass_err = 3e-8;
  r.constraint_violation = 0.0;
  r.kinetic_gamma = 0.42;
  r.iterations = {{"outer", 12}, {"hjb", 34}, {"fp", 7}};
  nlohmann::json doc = r.to_json();
  CHECK(doc.at("primal_cost") == 1.5);
  CHECK(doc.at("dual_value") == -1.4);
  CHECK(doc.at("gap") == 0.1);
  CHECK(doc.at("comp_resid") == 1e-9);
  CHECK(doc.at("hjb_resid") == 2e-11);
  CHECK(doc.at("fp_mass_err") == 3e-8);
  CHECK(doc.at("constraint_violation") == 0.0);
  CHECK(doc.at("kinetic_gamma") == 0.42);
  CHECK(doc.at("iterations").at("outer") == 12);
  mfc::SolveReport back = mfc::SolveReport::from_json(doc);
  CHECK(back.primal_cost == r.primal_cost);
  CHECK(back.kinetic_gamma == r.kinetic_gamma);
  CHECK(back.iterations == r.iterations);
}

TEST_CASE("kkt residuals vanish on a converged solve and flag corruption") {
  mfc::Scenario sc = mfc::preset("smart_charging");
  mfc::GridSpec grid = mfc::GridSpec::make(32, 32, 1.0);
  mfc::DualConfig dcfg;
  dcfg.max_outer = 10;
  mfc::DualResult sol = mfc::solve_dual(sc, grid, dcfg);
  REQUIRE(sol.converged);

  mfc::HJBConfig hcfg{sol.delta, 1e-10, 200, 4};
  mfc::KKTResiduals res =
      mfc::kkt_residuals(sol.best.phi, sol.best.lambda, sol.best.m, sol.best.alpha, sc, hcfg);
  CHECK(res.hjb <= 1e-8);
  CHECK(res.fp <= 1e-8);
  CHECK(res.control <= 1e-10);
  CHECK(res.feasibility <= 1e-8);
  CHECK(res.complementarity <= 1e-8);

  SUBCASE("perturbed value function") {
    mfc::ValueField phi = sol.best.phi;
    phi.at(0, grid.nt / 2, grid.ns / 2) += 0.05;
    mfc::KKTResiduals bad = mfc::kkt_residuals(phi, sol.best.lambda, sol.best.m, sol.best.alpha, sc, hcfg);
    CHECK(bad.hjb > 1e-3);
  }
  SUBCASE("perturbed density") {
    mfc::DensityField m = sol.best.m;
    for (int q = 0; q <= grid.ns; ++q) m.at(0, grid.nt, q) += 0.01;
    mfc::KKTResiduals bad = mfc::kkt_residuals(sol.best.phi, sol.best.lambda, m, sol.best.alpha, sc, hcfg);
    CHECK(bad.fp > 1e-3);
  }
  SUBCASE("perturbed control") {
    mfc::ControlField alpha = sol.best.alpha;
    alpha.at(0, 1, 2, 2) += 0.2;
    mfc::KKTResiduals bad = mfc::kkt_residuals(sol.best.phi, sol.best.lambda, sol.best.m, alpha, sc, hcfg);
    CHECK(bad.control >= doctest::Approx(0.2).epsilon(1e-6));
  }
}

TEST_CASE("densities move no faster than the displacement bound allows") {
  mfc::Scenario sc = mfc::preset("smart_charging");
  mfc::GridSpec grid = mfc::GridSpec::make(32, 32, 1.0);
  mfc::DualResult sol = mfc::solve_dual(sc, grid, {});
  REQUIRE(sol.converged);
  double gamma = mfc::kinetic_gamma(sol.best.m, sol.best.alpha);
  mfc::DisplacementCheck chk = mfc::displacement_bound_check(sol.best.m, sc, gamma, 25, 42);
  CHECK(chk.ok);
  CHECK(chk.worst_ratio <= 1.0);
  CHECK(chk.worst_ratio > 0.0);  // the bound is active, not vacuous
}
