#pragma once

#include <vector>

#include "mfswitch/fields.hpp"
#include "mfswitch/flow.hpp"
#include "mfswitch/scenario.hpp"

namespace mfc {

// Switching Hamiltonian: H(y) = (1/2) * max(-y, 0)^2.  Convex, C^1,
// nonincreasing; H(y) = 0 for y >= 0.
inline double hamiltonian(double y) {
  double yneg = y < 0.0 ? -y : 0.0;
  return 0.5 * yneg * yneg;
}

// H'(y) = min(y, 0).
inline double hamiltonian_deriv(double y) { return y < 0.0 ? y : 0.0; }

// A priori constants attached to a scenario and a truncation margin delta.
// All derivative-based quantities are sampled surrogates (divided differences
// on a refined grid), so they are estimates, not certified bounds.
struct HJBConstants {
  double gmax = 0.0;   // sup |g|
  double cmax = 0.0;   // sup |c|
  double bmax = 0.0;   // sup |b|
  double K = 0.0;      // common Lipschitz surrogate of g, c(t,.), b
  double M = 0.0;      // gmax + T*(cmax + |I| H(delta)) + 2
  double Mbar = 0.0;   // M + delta
  double Kdelta = 0.0; // Lipschitz bound of H and H' on [-2 Mbar, 2 Mbar]
  double kdelta = 0.0; // K + 4 (|I|-1) Kdelta + 1
  double kappa = 0.0;  // |I|^2 Kdelta (sup|dS/ds| + 1) + 1
  double P = 0.0;      // Mbar - 2; a posteriori bound on |phi|
};

HJBConstants hjb_constants(const Scenario& sc, double delta, const GridSpec& grid);

struct HJBConfig {
  double delta = 1.0;   // truncation margin; must exceed the multiplier mass
  double tol = 1e-10;   // sup-norm stopping threshold for the Picard loop
  int max_iter = 200;
  int flow_steps = 4;   // RK4 substeps per time cell for characteristics
};

// Multiplier mass >= delta (the truncation radius would not dominate it).
struct DeltaTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Immutable per-(scenario, grid, config) tables reused across solves:
// characteristic atlas, running cost sampled on the grid, and the terminal
// cost propagated along characteristics.
struct HJBContext {
  const Scenario* sc = nullptr;
  GridSpec grid{};
  HJBConfig cfg{};
  HJBConstants consts{};
  FlowAtlas atlas;
  std::vector<double> c_grid;  // modes x (nt+1) x (ns+1), c_i(t_k, s_m)
  std::vector<double> g_term;  // modes x (nt+1) x (ns+1), g_i(S_i^{t_k,s_m}(T))

  static HJBContext build(const Scenario& sc, const GridSpec& grid, const HJBConfig& cfg);

  double c_at(int i, int k, int m) const {
    return c_grid[(static_cast<size_t>(i) * (grid.nt + 1) + k) * (grid.ns + 1) + m];
  }
  double g_at(int i, int k, int m) const {
    return g_term[(static_cast<size_t>(i) * (grid.nt + 1) + k) * (grid.ns + 1) + m];
  }
};

// One application of the shifted backward integral operator in the
// nu-representation (nu_i = phi_i minus the remaining multiplier mass):
//
//   (Gamma nu)_i(t_k, s_m) = int_{t_k}^T [ -sum_{j != i} H(nu_j - nu_i + Lam_j - Lam_i)
//                                          + c_i ](tau, S_i^{t_k,s_m}(tau)) dtau
//                            + g_i(S_i^{t_k,s_m}(T))
//
// with Lam_i(tau) the remaining multiplier mass on [tau, T], trapezoid
// quadrature over the time nodes, and linear interpolation of nu in space.
ValueField gamma_map(const ValueField& nu, const MultiplierPath& lambda, const HJBContext& ctx);

// C^1 monotone 1-Lipschitz clamp: identity on [-(M-1), M-1], constant
// +-(M - 1/2) outside [-M, M], quadratic blend in between.
double truncate_value(double x, double M);
void truncate_field(ValueField& f, double M);

struct HJBResult {
  ValueField phi;  // nu + remaining multiplier mass (the value function)
  ValueField nu;   // fixed point of the truncated operator
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;  // sup-norm change per Picard sweep
};

// Picard iteration nu <- F_delta(Gamma nu) started from the propagated
// terminal cost.  Throws DeltaTooSmall when the multiplier mass reaches
// cfg.delta.  On max_iter without reaching tol the last iterate is returned
// with converged = false.
HJBResult picard_solve(const MultiplierPath& lambda, const HJBContext& ctx);
HJBResult picard_solve(const MultiplierPath& lambda, const Scenario& sc, const GridSpec& grid,
                       const HJBConfig& cfg);

struct ComparisonReport {
  bool ok = true;
  double lower_margin = 0.0;  // min over nodes of phi - lower_bound
  double upper_margin = 0.0;  // min over nodes of upper_bound - phi
};

// Explicit comparison bounds:
//   -gmax - (T-t)(cmax + |I| H(delta)) <= phi_i(t,s)
//    phi_i(t,s) <= gmax + (T-t) cmax + Lam_i(t)
ComparisonReport comparison_check(const ValueField& phi, const MultiplierPath& lambda,
                                  const HJBContext& ctx);

}  // namespace mfc
