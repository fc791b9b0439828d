#pragma once

#include <vector>

#include "mfswitch/fields.hpp"
#include "mfswitch/grid.hpp"
#include "mfswitch/scenario.hpp"

namespace mfc {

// The oracle deliberately shares nothing with the characteristics solver:
// explicit-Euler time stepping, upwind flux transport on a small node grid,
// switching mass fluxes E_{i->j} = alpha_{i->j} m_i as decision variables,
// and a projected-gradient method with augmented-Lagrangian capacity rows.

struct OracleTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DiscreteProgram {
  int modes = 0;
  int nt = 0, ns = 0;
  double dt = 0.0, ds = 0.0, horizon = 0.0;
  std::vector<double> c;        // modes x (nt+1) x (ns+1)
  std::vector<double> g;        // modes x (ns+1)
  std::vector<double> m0;       // modes x (ns+1)
  std::vector<double> cap;      // modes x (nt+1)
  std::vector<double> b_iface;  // modes x ns, upwind interface velocities
  size_t variable_count() const;

  double& at_c(int i, int k, int j) { return c[(static_cast<size_t>(i) * (nt + 1) + k) * (ns + 1) + j]; }
  double at_c(int i, int k, int j) const { return c[(static_cast<size_t>(i) * (nt + 1) + k) * (ns + 1) + j]; }
};

// Samples the scenario on a coarse grid (at most 16x16, three modes,
// 1e5 variables); throws OracleTooLarge beyond that.
DiscreteProgram build_discrete(const Scenario& sc, const GridSpec& grid);

struct OracleResult {
  double value = 0.0;             // objective without penalty terms
  DensityField m;                 // explicit-Euler trajectory of the best iterate
  std::vector<double> E;          // switching mass fluxes, pair-major on nodes
  MultiplierPath lambda;          // capacity multipliers scaled to densities
  double max_infeasibility = 0.0; // capacity excess of the returned iterate
  int iterations = 0;
  bool converged = false;
};

OracleResult solve_discrete(const DiscreteProgram& prog, double tol = 1e-9,
                            int max_outer = 40, int max_inner = 4000);

// Objective of an arbitrary switching plan (pair-major node values, as in
// OracleResult::E): runs the explicit-Euler recursion and scores it without
// any capacity penalty.  Lets callers check candidate plans independently.
double discrete_objective(const DiscreteProgram& prog, const std::vector<double>& E);

}  // namespace mfc
