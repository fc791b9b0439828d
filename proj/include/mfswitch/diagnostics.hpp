#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "mfswitch/fields.hpp"
#include "mfswitch/fokker_planck.hpp"
#include "mfswitch/hjb.hpp"
#include "mfswitch/scenario.hpp"

namespace mfc {

// Switching effort L(x) = x^2/2 for x >= 0, +infinity otherwise (Legendre
// transform of the Hamiltonian restricted to admissible rates).
double running_cost_L(double x);

// A control field carries a negative rate, so its cost is infinite.
struct InfeasibleControl : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Trapezoid-in-(t,s) primal objective:
//   sum_i int int [ c_i + sum_{j != i} L(alpha_{i->j}) ] m_i ds dt
//   + sum_i int g_i m_i(T) ds.
double primal_cost(const DensityField& m, const ControlField& alpha, const Scenario& sc);

// Fenchel pairing: the two optimal values are negatives of one another, so
// primal + dual certifies optimality as it approaches zero.
double duality_gap(double primal, double dual);

// Aggregate switching energy sum_{i != j} int int (alpha^2/2) m_i ds dt.
double kinetic_gamma(const DensityField& m, const ControlField& alpha);

struct KKTResiduals {
  // Defect of the value function under the backward integral operator in the
  // nu-representation, per unit of remaining time, sup over nodes.
  double hjb = 0.0;
  // Sup distance between the stored density and a fresh transport solve
  // driven by the stored control.
  double fp = 0.0;
  // Sup over supp(m) of |alpha_{i->j} - max(phi_i - phi_j, 0)|.
  double control = 0.0;
  // Max over (i,k) of (mode mass - D_i)^+.
  double feasibility = 0.0;
  // |sum_i int (D_i - mode mass) lambda_i(dt)|.
  double complementarity = 0.0;
};

KKTResiduals kkt_residuals(const ValueField& phi, const MultiplierPath& lambda,
                           const DensityField& m, const ControlField& alpha, const Scenario& sc,
                           const HJBConfig& cfg);

struct SolveReport {
  double primal_cost = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  double comp_resid = 0.0;
  double hjb_resid = 0.0;
  double fp_mass_err = 0.0;
  double constraint_violation = 0.0;
  double kinetic_gamma = 0.0;
  std::map<std::string, int> iterations;  // stage name -> count

  nlohmann::json to_json() const;
  static SolveReport from_json(const nlohmann::json& doc);
};

// Mass transport speed check: for ntests random piecewise-linear test
// functions psi with |psi| <= 1, unit Lipschitz bound, and cross-mode
// spread |psi_i - psi_j| <= 1 (a mode hop costs one unit of distance),
//   |sum_i int psi_i m_i(t) - sum_i int psi_i m_i(t')|
//     <= sqrt(|t-t'|) (sqrt(T) |I| sup|b| + sqrt(2 gamma))
// over all node pairs.  Returns the worst ratio of left side to right side.
struct DisplacementCheck {
  bool ok = true;
  double worst_ratio = 0.0;
};
DisplacementCheck displacement_bound_check(const DensityField& m, const Scenario& sc,
                                           double gamma, int ntests, uint64_t seed);

}  // namespace mfc
