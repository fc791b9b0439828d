#pragma once

#include <vector>

#include "mfswitch/fields.hpp"
#include "mfswitch/flow.hpp"
#include "mfswitch/scenario.hpp"

namespace mfc {

// Feedback switching intensities alpha_{i->j} = max(phi_i - phi_j, 0) on the
// grid nodes.
ControlField control_from_value(const ValueField& phi);

// Dense |I| x |I| reaction matrix G(t,s) of the transport system, row-major:
//   (G m)_i = -m_i db_i/ds - sum_{j != i} (alpha_{i->j} m_i - alpha_{j->i} m_j).
// Control values are interpolated at (t, s) from the grid field.
std::vector<double> reaction_matrix(const ControlField& alpha, const Scenario& sc, double t,
                                    double s);

struct FPConfig {
  double tol = 1e-11;
  int max_iter = 200;
  int flow_steps = 4;
};

struct FPResult {
  DensityField m;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
  // Integrated negative mass removed from the final iterate, max over time
  // nodes.  Stays at quadrature-noise level for smooth inputs.
  double clipped_mass = 0.0;
};

// Picard iteration on the along-characteristics integral form
//   m_i(t,s) = m0_i(S_i^{t,s}(0)) + int_0^t (G m)_i(tau, S_i^{t,s}(tau)) dtau
// with composite Simpson quadrature in time and cubic interpolation of m and
// alpha in space.  Negative values of the converged iterate are clipped to
// zero (and accounted in clipped_mass); the stored field is never rescaled.
FPResult solve_fp(const ControlField& alpha, const Scenario& sc, const GridSpec& grid,
                  const FPConfig& cfg = {});
FPResult solve_fp(const ControlField& alpha, const Scenario& sc, const FlowAtlas& atlas,
                  const FPConfig& cfg = {});

// Trapezoid mass of mode i at time node k.
double mode_mass(const DensityField& m, int i, int k);

}  // namespace mfc
