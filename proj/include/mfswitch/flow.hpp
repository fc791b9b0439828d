#pragma once

#include <vector>

#include "mfswitch/grid.hpp"
#include "mfswitch/scenario.hpp"

namespace mfc {

// Characteristic position query: follow ds/dtau = b_mode(s) from
// (start_time, start_pos) to eval_time.  eval_time may lie before or after
// start_time; the state is clamped to [0,1] after every substep (the drift
// vanishes outside, so clamping only removes roundoff excursions).
struct FlowQuery {
  int mode = 0;
  double start_time = 0.0;
  double start_pos = 0.0;
  double eval_time = 0.0;
};

// Classic RK4 with `steps` fixed substeps over [start_time, eval_time].
double advect(const Scenario& sc, const FlowQuery& q, int steps);

// d/ds of the flow map: exp of the trapezoid quadrature of b' along the
// characteristic, sampled at the same substep nodes.  Strictly positive.
double flow_space_derivative(const Scenario& sc, const FlowQuery& q, int steps);

// Max over grid samples of the two flow identities:
//  - inverse property  S^{tau,S^{t,s}(tau)}(t) = s
//  - transport residual d/dt S + b(s) d/ds S = 0 (central differences)
double check_flow_identities(const Scenario& sc, const GridSpec& grid, int steps_per_cell);

// Precomputed characteristic tables on a grid.  Because the drift is
// autonomous, the position reached from node s_m after n time cells does not
// depend on the starting node: forward(i,n,m) = S_i^{t_k, s_m}(t_{k+n}) for
// every k.  Shared by the value-function and transport solvers.
class FlowAtlas {
 public:
  FlowAtlas() = default;
  FlowAtlas(const Scenario& sc, const GridSpec& grid, int steps_per_cell);

  // Position after advecting n cells forward (+) or backward (-) from s_m.
  double forward(int i, int n, int m) const { return fwd_[index(i, n, m)]; }
  double backward(int i, int n, int m) const { return bwd_[index(i, n, m)]; }

  // exp of the b' quadrature along the same paths (space derivative of the
  // flow map over n cells).
  double forward_jacobian(int i, int n, int m) const { return fwd_jac_[index(i, n, m)]; }

  const GridSpec& grid() const { return grid_; }

 private:
  size_t index(int i, int n, int m) const {
    return (static_cast<size_t>(i) * (grid_.nt + 1) + n) * (grid_.ns + 1) + m;
  }

  GridSpec grid_{};
  std::vector<double> fwd_, bwd_, fwd_jac_;
};

}  // namespace mfc
