#include "mfswitch/fokker_planck.hpp"

#include <algorithm>
#include <cmath>

#include "mfswitch/interp.hpp"

namespace mfc {

ControlField control_from_value(const ValueField& phi) {
  const GridSpec& grid = phi.grid();
  ControlField alpha(phi.modes(), grid);
  for (int i = 0; i < phi.modes(); ++i)
    for (int j = 0; j < phi.modes(); ++j) {
      if (i == j) continue;
      for (int k = 0; k <= grid.nt; ++k) {
        const double* pi = phi.row(i, k);
        const double* pj = phi.row(j, k);
        double* a = alpha.row(i, j, k);
        for (int m = 0; m <= grid.ns; ++m) a[m] = std::max(pi[m] - pj[m], 0.0);
      }
    }
  return alpha;
}

namespace {

// alpha_{i->j} interpolated at (t, s): linear in time between the bracketing
// nodes, cubic in space.
double alpha_at(const ControlField& alpha, int i, int j, double t, double s) {
  const GridSpec& grid = alpha.grid();
  double u = t / grid.dt();
  int k = std::clamp(static_cast<int>(u), 0, grid.nt - 1);
  double w = std::clamp(u - k, 0.0, 1.0);
  double lo = cubic_row(alpha.row(i, j, k), grid.ns, s);
  double hi = cubic_row(alpha.row(i, j, k + 1), grid.ns, s);
  return lo + w * (hi - lo);
}

// Composite quadrature weights over the time nodes 0..k (unit cell width):
// Simpson pairs, with a 3/8 block finishing odd cell counts; a single cell
// falls back to the trapezoid.
std::vector<std::vector<double>> quadrature_weights(int nt) {
  std::vector<std::vector<double>> W(nt + 1);
  for (int k = 0; k <= nt; ++k) {
    auto& w = W[k];
    w.assign(k + 1, 0.0);
    if (k == 0) continue;
    if (k == 1) {
      w[0] = w[1] = 0.5;
      continue;
    }
    int simpson_cells = (k % 2 == 0) ? k : k - 3;
    for (int q = 0; q + 2 <= simpson_cells; q += 2) {
      w[q] += 1.0 / 3.0;
      w[q + 1] += 4.0 / 3.0;
      w[q + 2] += 1.0 / 3.0;
    }
    if (k % 2 != 0) {
      int b = simpson_cells;  // 3/8 rule on the last three cells
      w[b] += 3.0 / 8.0;
      w[b + 1] += 9.0 / 8.0;
      w[b + 2] += 9.0 / 8.0;
      w[b + 3] += 3.0 / 8.0;
    }
  }
  return W;
}

}  // namespace

std::vector<double> reaction_matrix(const ControlField& alpha, const Scenario& sc, double t,
                                    double s) {
  const int n = sc.mode_count();
  std::vector<double> G(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    double diag = -sc.velocity_deriv(i, s);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      diag -= alpha_at(alpha, i, j, t, s);
      G[static_cast<size_t>(i) * n + j] = alpha_at(alpha, j, i, t, s);
    }
    G[static_cast<size_t>(i) * n + i] = diag;
  }
  return G;
}

FPResult solve_fp(const ControlField& alpha, const Scenario& sc, const FlowAtlas& atlas,
                  const FPConfig& cfg) {
  const GridSpec& grid = atlas.grid();
  const int modes = sc.mode_count();
  const int nt = grid.nt, ns = grid.ns;
  const double dt = grid.dt();
  const size_t plane = static_cast<size_t>(nt + 1) * (ns + 1);

  // Initial density and drift slope along the backward characteristics:
  // position at time t_{k-n} of the mode-i path through (t_k, s_m) is
  // backward(i, n, m), a function of the lag n only.
  std::vector<double> m0t(modes * plane), dbt(modes * plane);
  for (int i = 0; i < modes; ++i)
    for (int n = 0; n <= nt; ++n)
      for (int m = 0; m <= ns; ++m) {
        double x = atlas.backward(i, n, m);
        m0t[(static_cast<size_t>(i) * (nt + 1) + n) * (ns + 1) + m] = sc.initial_density(i, x);
        dbt[(static_cast<size_t>(i) * (nt + 1) + n) * (ns + 1) + m] = sc.velocity_deriv(i, x);
      }
  auto M0 = [&](int i, int n, int m) {
    return m0t[(static_cast<size_t>(i) * (nt + 1) + n) * (ns + 1) + m];
  };
  auto DB = [&](int i, int n, int m) {
    return dbt[(static_cast<size_t>(i) * (nt + 1) + n) * (ns + 1) + m];
  };

  const auto W = quadrature_weights(nt);

  FPResult res;
  res.m = DensityField(modes, grid);
  for (int i = 0; i < modes; ++i)
    for (int k = 0; k <= nt; ++k)
      for (int m = 0; m <= ns; ++m) res.m.at(i, k, m) = M0(i, k, m);

  std::vector<double> f;
  for (int it = 0; it < cfg.max_iter; ++it) {
    DensityField next(modes, grid);
    for (int i = 0; i < modes; ++i) {
      for (int m = 0; m <= ns; ++m) next.at(i, 0, m) = M0(i, 0, m);
      for (int m = 0; m <= ns; ++m) {
        for (int k = 1; k <= nt; ++k) {
          const auto& w = W[k];
          double acc = 0.0;
          for (int kp = 0; kp <= k; ++kp) {
            double x = atlas.backward(i, k - kp, m);
            double mi = cubic_row(res.m.row(i, kp), ns, x);
            double gm = -mi * DB(i, k - kp, m);
            for (int j = 0; j < modes; ++j) {
              if (j == i) continue;
              gm -= cubic_row(alpha.row(i, j, kp), ns, x) * mi;
              gm += cubic_row(alpha.row(j, i, kp), ns, x) *
                    cubic_row(res.m.row(j, kp), ns, x);
            }
            acc += w[kp] * gm;
          }
          next.at(i, k, m) = M0(i, k, m) + acc * dt;
        }
      }
    }
    double resid = 0.0;
    const auto& a = next.raw();
    const auto& b = res.m.raw();
    for (size_t q = 0; q < a.size(); ++q) resid = std::max(resid, std::abs(a[q] - b[q]));
    res.m = std::move(next);
    res.residual = resid;
    res.iterations = it + 1;
    if (resid <= cfg.tol) {
      res.converged = true;
      break;
    }
  }

  // Clip once, after convergence, so the iteration itself stays linear in m0.
  const double ds = grid.ds();
  for (int k = 0; k <= nt; ++k) {
    double negmass = 0.0;
    for (int i = 0; i < modes; ++i) {
      double* row = res.m.row(i, k);
      for (int m = 0; m <= ns; ++m)
        if (row[m] < 0.0) {
          negmass += -row[m] * ds * ((m == 0 || m == ns) ? 0.5 : 1.0);
          row[m] = 0.0;
        }
    }
    res.clipped_mass = std::max(res.clipped_mass, negmass);
  }
  return res;
}

FPResult solve_fp(const ControlField& alpha, const Scenario& sc, const GridSpec& grid,
                  const FPConfig& cfg) {
  FlowAtlas atlas(sc, grid, cfg.flow_steps);
  return solve_fp(alpha, sc, atlas, cfg);
}

double mode_mass(const DensityField& m, int i, int k) {
  const int ns = m.grid().ns;
  const double* row = m.row(i, k);
  double acc = 0.5 * (row[0] + row[ns]);
  for (int q = 1; q < ns; ++q) acc += row[q];
  return acc * m.grid().ds();
}

}  // namespace mfc
