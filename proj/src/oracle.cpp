#include "mfswitch/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfc {

namespace {

constexpr double kPerspEps = 1e-8;

struct Layout {
  int modes, nt, ns, pairs;
  size_t m_size() const { return static_cast<size_t>(modes) * (nt + 1) * (ns + 1); }
  size_t e_size() const { return static_cast<size_t>(pairs) * (nt + 1) * (ns + 1); }
  size_t mi(int i, int k, int j) const {
    return (static_cast<size_t>(i) * (nt + 1) + k) * (ns + 1) + j;
  }
  size_t ei(int p, int k, int j) const {
    return (static_cast<size_t>(p) * (nt + 1) + k) * (ns + 1) + j;
  }
  int pair(int i, int j) const { return i * (modes - 1) + (j < i ? j : j - 1); }
  int pair_src(int p) const { return p / (modes - 1); }
  int pair_dst(int p) const {
    int r = p % (modes - 1), i = p / (modes - 1);
    return r < i ? r : r + 1;
  }
};

// m[k+1] = m[k] - (dt/ds) div(upwind flux) - dt * net switching outflow.
void forward_simulate(const DiscreteProgram& prog, const Layout& L,
                      const std::vector<double>& E, std::vector<double>& m) {
  const double lam = prog.dt / prog.ds;
  for (int i = 0; i < L.modes; ++i)
    for (int j = 0; j <= L.ns; ++j) m[L.mi(i, 0, j)] = prog.m0[static_cast<size_t>(i) * (L.ns + 1) + j];

  std::vector<double> flux(L.ns + 1, 0.0);  // flux[j] = F_{j+1/2}, j = 0..ns-1
  for (int k = 0; k < L.nt; ++k) {
    for (int i = 0; i < L.modes; ++i) {
      const double* mk = &m[L.mi(i, k, 0)];
      double* mk1 = &m[L.mi(i, k + 1, 0)];
      for (int j = 0; j < L.ns; ++j) {
        double b = prog.b_iface[static_cast<size_t>(i) * L.ns + j];
        flux[j] = b > 0.0 ? b * mk[j] : b * mk[j + 1];
      }
      for (int j = 0; j <= L.ns; ++j) {
        double div = (j < L.ns ? flux[j] : 0.0) - (j > 0 ? flux[j - 1] : 0.0);
        double react = 0.0;
        for (int o = 0; o < L.modes; ++o) {
          if (o == i) continue;
          react -= E[L.ei(L.pair(i, o), k, j)];
          react += E[L.ei(L.pair(o, i), k, j)];
        }
        mk1[j] = mk[j] - lam * div + prog.dt * react;
      }
    }
  }
}

double objective(const DiscreteProgram& prog, const Layout& L, const std::vector<double>& E,
                 const std::vector<double>& m) {
  double total = 0.0;
  for (int i = 0; i < L.modes; ++i) {
    for (int k = 0; k <= L.nt; ++k) {
      double wt = (k == 0 || k == L.nt) ? 0.5 : 1.0;
      double slab = 0.0;
      for (int j = 0; j <= L.ns; ++j) {
        double mi = m[L.mi(i, k, j)];
        double persp = 0.0;
        for (int o = 0; o < L.modes; ++o) {
          if (o == i) continue;
          double e = E[L.ei(L.pair(i, o), k, j)];
          persp += e * e / (2.0 * (std::max(mi, 0.0) + kPerspEps));
        }
        slab += prog.at_c(i, k, j) * mi + persp;
      }
      total += wt * prog.dt * prog.ds * slab;
    }
    for (int j = 0; j <= L.ns; ++j)
      total += prog.ds * prog.g[static_cast<size_t>(i) * (L.ns + 1) + j] * m[L.mi(i, L.nt, j)];
  }
  return total;
}

// Capacity excess h_{ik} = ds * sum_j m - D at nodes k >= 1.
void capacity_excess(const DiscreteProgram& prog, const Layout& L, const std::vector<double>& m,
                     std::vector<double>& h) {
  for (int i = 0; i < L.modes; ++i)
    for (int k = 0; k <= L.nt; ++k) {
      double mass = 0.0;
      for (int j = 0; j <= L.ns; ++j) mass += m[L.mi(i, k, j)];
      mass *= prog.ds;
      h[static_cast<size_t>(i) * (L.nt + 1) + k] =
          k == 0 ? 0.0 : mass - prog.cap[static_cast<size_t>(i) * (L.nt + 1) + k];
    }
}

double penalty_value(const std::vector<double>& h, const std::vector<double>& mu, double rho) {
  double acc = 0.0;
  for (size_t q = 0; q < h.size(); ++q) {
    double v = std::max(0.0, mu[q] + rho * h[q]);
    acc += (v * v - mu[q] * mu[q]) / (2.0 * rho);
  }
  return acc;
}

// Reverse sweep: p[k] = dL/dm[k] including everything downstream.
void adjoint(const DiscreteProgram& prog, const Layout& L, const std::vector<double>& E,
             const std::vector<double>& m, const std::vector<double>& h,
             const std::vector<double>& mu, double rho, std::vector<double>& p) {
  const double lam = prog.dt / prog.ds;
  auto direct = [&](int i, int k, int j) {
    double wt = (k == 0 || k == L.nt) ? 0.5 : 1.0;
    double mi = m[L.mi(i, k, j)];
    double dpersp = 0.0;
    if (mi > 0.0) {
      for (int o = 0; o < L.modes; ++o) {
        if (o == i) continue;
        double e = E[L.ei(L.pair(i, o), k, j)];
        double denom = mi + kPerspEps;
        dpersp -= e * e / (2.0 * denom * denom);
      }
    }
    double grad = wt * prog.dt * prog.ds * (prog.at_c(i, k, j) + dpersp);
    if (k == L.nt) grad += prog.ds * prog.g[static_cast<size_t>(i) * (L.ns + 1) + j];
    if (k >= 1) {
      double mult = std::max(0.0, mu[static_cast<size_t>(i) * (L.nt + 1) + k] +
                                      rho * h[static_cast<size_t>(i) * (L.nt + 1) + k]);
      grad += mult * prog.ds;
    }
    return grad;
  };

  for (int i = 0; i < L.modes; ++i)
    for (int j = 0; j <= L.ns; ++j) p[L.mi(i, L.nt, j)] = direct(i, L.nt, j);

  for (int k = L.nt - 1; k >= 0; --k) {
    for (int i = 0; i < L.modes; ++i) {
      const double* pn = &p[L.mi(i, k + 1, 0)];
      double* pk = &p[L.mi(i, k, 0)];
      for (int j = 0; j <= L.ns; ++j) {
        double bR = j < L.ns ? prog.b_iface[static_cast<size_t>(i) * L.ns + j] : 0.0;
        double bL = j > 0 ? prog.b_iface[static_cast<size_t>(i) * L.ns + (j - 1)] : 0.0;
        double acc = pn[j] * (1.0 - lam * (std::max(bR, 0.0) - std::min(bL, 0.0)));
        if (j > 0) acc -= lam * std::min(bL, 0.0) * pn[j - 1];
        if (j < L.ns) acc += lam * std::max(bR, 0.0) * pn[j + 1];
        pk[j] = acc + direct(i, k, j);
      }
    }
  }
}

void gradient_E(const DiscreteProgram& prog, const Layout& L, const std::vector<double>& E,
                const std::vector<double>& m, const std::vector<double>& p,
                std::vector<double>& gE) {
  for (int pidx = 0; pidx < L.pairs; ++pidx) {
    int i = L.pair_src(pidx), o = L.pair_dst(pidx);
    for (int k = 0; k <= L.nt; ++k) {
      double wt = (k == 0 || k == L.nt) ? 0.5 : 1.0;
      for (int j = 0; j <= L.ns; ++j) {
        double mi = m[L.mi(i, k, j)];
        double e = E[L.ei(pidx, k, j)];
        double grad = wt * prog.dt * prog.ds * e / (std::max(mi, 0.0) + kPerspEps);
        if (k < L.nt) grad += prog.dt * (p[L.mi(o, k + 1, j)] - p[L.mi(i, k + 1, j)]);
        gE[L.ei(pidx, k, j)] = grad;
      }
    }
  }
}

}  // namespace

size_t DiscreteProgram::variable_count() const {
  size_t nodes = static_cast<size_t>(nt + 1) * (ns + 1);
  return static_cast<size_t>(modes) * nodes + static_cast<size_t>(modes) * (modes - 1) * nodes;
}

DiscreteProgram build_discrete(const Scenario& sc, const GridSpec& grid) {
  if (grid.nt > 16 || grid.ns > 16)
    throw OracleTooLarge("oracle grid is capped at 16x16");
  if (sc.mode_count() > 3) throw OracleTooLarge("oracle handles at most three modes");

  DiscreteProgram prog;
  prog.modes = sc.mode_count();
  prog.nt = grid.nt;
  prog.ns = grid.ns;
  prog.dt = grid.dt();
  prog.ds = grid.ds();
  prog.horizon = grid.horizon;
  prog.c.resize(static_cast<size_t>(prog.modes) * (prog.nt + 1) * (prog.ns + 1));
  prog.g.resize(static_cast<size_t>(prog.modes) * (prog.ns + 1));
  prog.m0.resize(prog.g.size());
  prog.cap.resize(static_cast<size_t>(prog.modes) * (prog.nt + 1));
  prog.b_iface.resize(static_cast<size_t>(prog.modes) * prog.ns);
  if (prog.variable_count() > 100000) throw OracleTooLarge("oracle variable budget exceeded");

  for (int i = 0; i < prog.modes; ++i) {
    for (int k = 0; k <= prog.nt; ++k) {
      prog.cap[static_cast<size_t>(i) * (prog.nt + 1) + k] = sc.capacity(i, grid.t(k));
      for (int j = 0; j <= prog.ns; ++j)
        prog.at_c(i, k, j) = sc.running_cost(i, grid.t(k), grid.s(j));
    }
    for (int j = 0; j <= prog.ns; ++j) {
      prog.g[static_cast<size_t>(i) * (prog.ns + 1) + j] = sc.terminal_cost(i, grid.s(j));
      prog.m0[static_cast<size_t>(i) * (prog.ns + 1) + j] = sc.initial_density(i, grid.s(j));
    }
    for (int j = 0; j < prog.ns; ++j)
      prog.b_iface[static_cast<size_t>(i) * prog.ns + j] =
          sc.velocity(i, (grid.s(j) + grid.s(j + 1)) * 0.5);
  }
  return prog;
}

OracleResult solve_discrete(const DiscreteProgram& prog, double tol, int max_outer,
                            int max_inner) {
  Layout L{prog.modes, prog.nt, prog.ns, prog.modes * (prog.modes - 1)};
  GridSpec grid{prog.nt, prog.ns, prog.horizon};

  std::vector<double> E(L.modes > 1 ? L.e_size() : 0, 0.0);
  std::vector<double> m(L.m_size(), 0.0);
  std::vector<double> p(L.m_size(), 0.0);
  std::vector<double> gE(E.size(), 0.0);
  std::vector<double> h(static_cast<size_t>(L.modes) * (L.nt + 1), 0.0);
  std::vector<double> mu(h.size(), 0.0);
  double rho = 10.0;

  OracleResult res;
  res.m = DensityField(L.modes, grid);
  res.lambda = MultiplierPath(L.modes, grid);

  auto eval = [&](const std::vector<double>& Ecand, std::vector<double>& mbuf,
                  std::vector<double>& hbuf) {
    forward_simulate(prog, L, Ecand, mbuf);
    capacity_excess(prog, L, mbuf, hbuf);
    return objective(prog, L, Ecand, mbuf) + penalty_value(hbuf, mu, rho);
  };

  std::vector<double> Etry(E.size()), mtry(m.size()), htry(h.size());
  std::vector<double> dir(E.size());
  int total_inner = 0;
  double prev_infeas = std::numeric_limits<double>::infinity();

  for (int outer = 0; outer < max_outer; ++outer) {
    double step = 1.0;
    double val = eval(E, m, h);
    bool inner_done = false;
    for (int inner = 0; inner < max_inner; ++inner) {
      ++total_inner;
      if (!E.empty()) {
        adjoint(prog, L, E, m, h, mu, rho, p);
        gradient_E(prog, L, E, m, p, gE);
      }
      // Projected gradient norm (E is clipped at zero).
      double gnorm = 0.0;
      for (size_t q = 0; q < E.size(); ++q) {
        double g = gE[q];
        if (E[q] <= 0.0 && g > 0.0) g = 0.0;
        gnorm = std::max(gnorm, std::abs(g));
      }
      if (gnorm <= tol * (1.0 + std::abs(val)) || E.empty()) {
        inner_done = true;
        break;
      }
      // Scale by the inverse diagonal of the separable curvature
      // wt*dt*ds/(m+eps); unit steps are then Newton steps on the
      // perspective part, which dominates the conditioning.
      for (int pidx = 0; pidx < L.pairs; ++pidx) {
        int i = L.pair_src(pidx);
        for (int k = 0; k <= L.nt; ++k) {
          double wt = (k == 0 || k == L.nt) ? 0.5 : 1.0;
          for (int j = 0; j <= L.ns; ++j) {
            size_t q = L.ei(pidx, k, j);
            double curv = wt * prog.dt * prog.ds / (std::max(m[L.mi(i, k, j)], 0.0) + kPerspEps);
            dir[q] = gE[q] / curv;
          }
        }
      }
      bool accepted = false;
      for (int bt = 0; bt < 40; ++bt) {
        for (size_t q = 0; q < E.size(); ++q) Etry[q] = std::max(0.0, E[q] - step * dir[q]);
        double cand = eval(Etry, mtry, htry);
        double decrease = 0.0;
        for (size_t q = 0; q < E.size(); ++q) decrease += gE[q] * (E[q] - Etry[q]);
        if (cand <= val - 1e-4 * decrease) {
          E.swap(Etry);
          m.swap(mtry);
          h.swap(htry);
          val = cand;
          step = std::min(step * 1.3, 4.0);
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        inner_done = true;  // stalled at line-search resolution
        break;
      }
    }

    double infeas = 0.0;
    for (double v : h) infeas = std::max(infeas, v);
    if (inner_done && infeas <= 1e-8) {
      res.converged = true;
      break;
    }
    for (size_t q = 0; q < h.size(); ++q) mu[q] = std::max(0.0, mu[q] + rho * h[q]);
    if (infeas > 0.25 * prev_infeas) rho = std::min(rho * 2.0, 1e6);
    prev_infeas = infeas;
  }

  forward_simulate(prog, L, E, m);
  capacity_excess(prog, L, m, h);
  res.value = objective(prog, L, E, m);
  res.E = E;
  res.iterations = total_inner;
  for (double v : h) res.max_infeasibility = std::max(res.max_infeasibility, v);
  for (int i = 0; i < L.modes; ++i)
    for (int k = 0; k <= L.nt; ++k)
      for (int j = 0; j <= L.ns; ++j) res.m.at(i, k, j) = m[L.mi(i, k, j)];
  // Node multiplier at k belongs to the cell ending there.
  for (int i = 0; i < L.modes; ++i)
    for (int k = 1; k <= L.nt; ++k)
      res.lambda.density(i, k - 1) = mu[static_cast<size_t>(i) * (L.nt + 1) + k] / prog.dt;
  return res;
}

double discrete_objective(const DiscreteProgram& prog, const std::vector<double>& E) {
  Layout L{prog.modes, prog.nt, prog.ns, prog.modes * (prog.modes - 1)};
  if (E.size() != L.e_size())
    throw std::invalid_argument("discrete_objective: switching plan has the wrong size");
  std::vector<double> m(L.m_size());
  forward_simulate(prog, L, E, m);
  return objective(prog, L, E, m);
}

}  // namespace mfc
