#pragma once

#include <functional>
#include <vector>

#include "mfswitch/diagnostics.hpp"
#include "mfswitch/fields.hpp"
#include "mfswitch/fokker_planck.hpp"
#include "mfswitch/hjb.hpp"
#include "mfswitch/scenario.hpp"

namespace mfc {

// Value of the concave-side objective at a fixed multiplier:
//   A(lambda) = sum_i [ -int phi_i^lambda(0,s) m0_i(s) ds + int_0^T D_i lambda_i(dt) ].
// The value function solve is the expensive part; the result is returned so
// callers can reuse it.
struct DualObjective {
  double value = 0.0;
  HJBResult hjb;
};
DualObjective dual_objective(const MultiplierPath& lambda, const HJBContext& ctx);

// Per-(mode, time-cell) subgradient of A: g_i(k) = D_i(t_k) - mode_mass(m,i,k)
// where m is the transport response to the feedback control of phi^lambda.
std::vector<double> subgradient(const DensityField& m, const Scenario& sc, const GridSpec& grid);

// Forward-in-time discrete convolution with a nonnegative kernel of the given
// width (in time units).  Preserves each mode's mass to machine precision;
// mass pushed past the horizon accumulates in the last cell.
MultiplierPath mollify(const MultiplierPath& lambda, double width);

// A priori mass bound for the optimal multiplier: (A + sum_i K_i) / slack,
// where K_i integrates the costs against the uncontrolled transport solution
// and slack is the minimal capacity margin of the initial masses.
struct LambdaMassBound {
  double bound = 0.0;
  bool ok = true;  // lambda.mass() <= bound
};
LambdaMassBound lambda_mass_bound(const MultiplierPath& lambda, double dual_value,
                                  const Scenario& sc, const GridSpec& grid, int flow_steps);

struct DualConfig {
  double step0 = 1.0;    // projected subgradient step is step0 / sqrt(iter)
  double gap_tol = 1e-2;
  double feas_tol = 1e-3;  // max allowed capacity excess of the primal response
  int max_outer = 200;
  double hjb_tol = 1e-10;
  double fp_tol = 1e-11;
  int max_inner = 200;
  int flow_steps = 4;
  // Invoked after each outer iteration (convergence-log streaming).
  std::function<void(const struct OuterIterate&)> on_iterate;
};

struct OuterIterate {
  int iter = 0;
  double dual = 0.0;
  double primal = 0.0;
  double gap = 0.0;
  double comp_resid = 0.0;
  double lambda_mass = 0.0;
  double step = 0.0;
  double feasibility = 0.0;  // max capacity excess (not part of the log line)
};

struct DualState {
  MultiplierPath lambda;
  ValueField phi;
  DensityField m;
  ControlField alpha;
  double dual_value = 0.0;
  double primal_value = 0.0;
};

struct DualResult {
  DualState best;  // iterate with the smallest |gap| scaled by 1 + |primal|
  SolveReport report;
  KKTResiduals kkt;    // residuals of the best iterate
  double delta = 0.0;  // truncation margin used for the final residual check
  std::vector<OuterIterate> log;
  bool converged = false;
  int outer_iterations = 0;
};

// Projected subgradient descent on A over nonnegative multipliers, with the
// truncation margin refreshed as delta = 2 * lambda mass + 1 each iteration.
// Stops once |gap| <= gap_tol * (1 + |primal|) and the complementarity
// residual is below gap_tol.
DualResult solve_dual(const Scenario& sc, const GridSpec& grid, const DualConfig& cfg = {});

}  // namespace mfc
