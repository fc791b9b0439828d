#include "mfswitch/flow.hpp"

#include <algorithm>
#include <cmath>

namespace mfc {

namespace {

double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

// One RK4 step of ds/dtau = b(s); h may be negative.
double rk4_step(const Scenario& sc, int mode, double s, double h) {
  double k1 = sc.velocity(mode, s);
  double k2 = sc.velocity(mode, s + 0.5 * h * k1);
  double k3 = sc.velocity(mode, s + 0.5 * h * k2);
  double k4 = sc.velocity(mode, s + h * k3);
  return clamp01(s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

}  // namespace

double advect(const Scenario& sc, const FlowQuery& q, int steps) {
  if (steps < 1) steps = 1;
  const double h = (q.eval_time - q.start_time) / steps;
  double s = clamp01(q.start_pos);
  for (int n = 0; n < steps; ++n) s = rk4_step(sc, q.mode, s, h);
  return s;
}

double flow_space_derivative(const Scenario& sc, const FlowQuery& q, int steps) {
  if (steps < 1) steps = 1;
  const double h = (q.eval_time - q.start_time) / steps;
  double s = clamp01(q.start_pos);
  double quad = 0.5 * sc.velocity_deriv(q.mode, s);
  for (int n = 0; n < steps; ++n) {
    s = rk4_step(sc, q.mode, s, h);
    quad += (n + 1 == steps ? 0.5 : 1.0) * sc.velocity_deriv(q.mode, s);
  }
  return std::exp(quad * h);
}

double check_flow_identities(const Scenario& sc, const GridSpec& grid, int steps_per_cell) {
  double worst = 0.0;
  const double T = grid.horizon;
  const double eps = T / grid.nt * 0.5;
  for (int i = 0; i < sc.mode_count(); ++i) {
    for (int k = 0; k <= grid.nt; k += std::max(1, grid.nt / 16)) {
      double t = grid.t(k);
      for (int m = 0; m <= grid.ns; m += std::max(1, grid.ns / 16)) {
        double s = grid.s(m);
        for (double tau : {0.0, 0.5 * T, T}) {
          int steps = std::max(1, static_cast<int>(std::lround(
                                      std::abs(tau - t) / (T / grid.nt))) *
                                      steps_per_cell);
          double y = advect(sc, {i, t, s, tau}, steps);
          double back = advect(sc, {i, tau, y, t}, steps);
          worst = std::max(worst, std::abs(back - s));

          // d/dt S^{t,s}(tau) + b(s) d/ds S^{t,s}(tau) = 0, central in t and s.
          if (t - eps < 0.0 || t + eps > T) continue;
          double hs = 0.5 / grid.ns;
          if (s - hs < 0.0 || s + hs > 1.0) continue;
          double dSdt = (advect(sc, {i, t + eps, s, tau}, steps) -
                         advect(sc, {i, t - eps, s, tau}, steps)) /
                        (2.0 * eps);
          double dSds = (advect(sc, {i, t, s + hs, tau}, steps) -
                         advect(sc, {i, t, s - hs, tau}, steps)) /
                        (2.0 * hs);
          worst = std::max(worst, std::abs(dSdt + sc.velocity(i, s) * dSds));
        }
      }
    }
  }
  return worst;
}

FlowAtlas::FlowAtlas(const Scenario& sc, const GridSpec& grid, int steps_per_cell)
    : grid_(grid) {
  const int modes = sc.mode_count();
  const size_t total = static_cast<size_t>(modes) * (grid.nt + 1) * (grid.ns + 1);
  fwd_.assign(total, 0.0);
  bwd_.assign(total, 0.0);
  fwd_jac_.assign(total, 1.0);
  const double dt = grid.dt();
  const double h = dt / std::max(1, steps_per_cell);

  for (int i = 0; i < modes; ++i) {
    for (int m = 0; m <= grid.ns; ++m) {
      fwd_[index(i, 0, m)] = grid.s(m);
      bwd_[index(i, 0, m)] = grid.s(m);
    }
    for (int n = 1; n <= grid.nt; ++n) {
      for (int m = 0; m <= grid.ns; ++m) {
        double sf = fwd_[index(i, n - 1, m)];
        double sb = bwd_[index(i, n - 1, m)];
        double quad = 0.5 * sc.velocity_deriv(i, sf);
        for (int p = 0; p < steps_per_cell; ++p) {
          sf = rk4_step(sc, i, sf, h);
          quad += (p + 1 == steps_per_cell ? 0.5 : 1.0) * sc.velocity_deriv(i, sf);
          sb = rk4_step(sc, i, sb, -h);
        }
        fwd_[index(i, n, m)] = sf;
        bwd_[index(i, n, m)] = sb;
        fwd_jac_[index(i, n, m)] = fwd_jac_[index(i, n - 1, m)] * std::exp(quad * h);
      }
    }
  }
}

}  // namespace mfc
