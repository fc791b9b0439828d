#include "mfswitch/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfswitch/interp.hpp"

namespace mfc {

namespace {

// Max divided difference over n+1 uniform samples of f on [lo, hi].
template <typename F>
double lipschitz_surrogate(F&& f, double lo, double hi, int n) {
  double h = (hi - lo) / n;
  double prev = f(lo), worst = 0.0;
  for (int m = 1; m <= n; ++m) {
    double cur = f(lo + m * h);
    worst = std::max(worst, std::abs(cur - prev) / h);
    prev = cur;
  }
  return worst;
}

}  // namespace

HJBConstants hjb_constants(const Scenario& sc, double delta, const GridSpec& grid) {
  HJBConstants c;
  const int modes = sc.mode_count();
  const int nsr = grid.ns * 4, ntr = grid.nt * 4;
  const double T = sc.horizon();
  double lip_b = 0.0;
  for (int i = 0; i < modes; ++i) {
    for (int m = 0; m <= nsr; ++m) {
      double s = static_cast<double>(m) / nsr;
      c.gmax = std::max(c.gmax, std::abs(sc.terminal_cost(i, s)));
      c.bmax = std::max(c.bmax, std::abs(sc.velocity(i, s)));
    }
    for (int k = 0; k <= ntr; ++k) {
      double t = T * k / ntr;
      for (int m = 0; m <= nsr; ++m)
        c.cmax = std::max(c.cmax, std::abs(sc.running_cost(i, t, static_cast<double>(m) / nsr)));
      c.K = std::max(c.K, lipschitz_surrogate(
                              [&](double s) { return sc.running_cost(i, t, s); }, 0.0, 1.0, nsr));
    }
    c.K = std::max(c.K, lipschitz_surrogate([&](double s) { return sc.terminal_cost(i, s); },
                                            0.0, 1.0, nsr));
    lip_b = std::max(lip_b, lipschitz_surrogate([&](double s) { return sc.velocity(i, s); },
                                                0.0, 1.0, nsr));
  }
  c.K = std::max(c.K, lip_b);
  c.M = c.gmax + T * (c.cmax + modes * hamiltonian(delta)) + 2.0;
  c.Mbar = c.M + delta;
  c.Kdelta = std::max(2.0 * c.Mbar, 1.0);
  c.kdelta = c.K + 4.0 * (modes - 1) * c.Kdelta + 1.0;
  c.kappa = static_cast<double>(modes) * modes * c.Kdelta * (std::exp(lip_b * T) + 1.0) + 1.0;
  c.P = c.Mbar - 2.0;
  return c;
}

HJBContext HJBContext::build(const Scenario& sc, const GridSpec& grid, const HJBConfig& cfg) {
  HJBContext ctx;
  ctx.sc = &sc;
  ctx.grid = grid;
  ctx.cfg = cfg;
  ctx.consts = hjb_constants(sc, cfg.delta, grid);
  ctx.atlas = FlowAtlas(sc, grid, cfg.flow_steps);
  const int modes = sc.mode_count();
  const size_t plane = static_cast<size_t>(grid.nt + 1) * (grid.ns + 1);
  ctx.c_grid.resize(modes * plane);
  ctx.g_term.resize(modes * plane);
  for (int i = 0; i < modes; ++i)
    for (int k = 0; k <= grid.nt; ++k)
      for (int m = 0; m <= grid.ns; ++m) {
        size_t idx = (static_cast<size_t>(i) * (grid.nt + 1) + k) * (grid.ns + 1) + m;
        ctx.c_grid[idx] = sc.running_cost(i, grid.t(k), grid.s(m));
        // Position at time T of the characteristic through (t_k, s_m).
        ctx.g_term[idx] = sc.terminal_cost(i, ctx.atlas.forward(i, grid.nt - k, m));
      }
  return ctx;
}

ValueField gamma_map(const ValueField& nu, const MultiplierPath& lambda, const HJBContext& ctx) {
  const GridSpec& grid = ctx.grid;
  const int modes = nu.modes();
  const int nt = grid.nt, ns = grid.ns;
  const double dt = grid.dt();
  ValueField out(modes, grid);

  // Remaining multiplier mass per mode and time node.
  std::vector<double> tail = lambda.tail_table();
  auto Lam = [&](int i, int k) { return tail[static_cast<size_t>(i) * (nt + 1) + k]; };

  std::vector<double> f(nt + 1);
  for (int i = 0; i < modes; ++i) {
    for (int m = 0; m <= ns; ++m) {
      for (int k = nt; k >= 0; --k) {
        if (k == nt) {
          out.at(i, nt, m) = ctx.g_at(i, nt, m);
          continue;
        }
        // Integrand at the time nodes of [t_k, T] along the mode-i
        // characteristic through (t_k, s_m).
        for (int kp = k; kp <= nt; ++kp) {
          double x = ctx.atlas.forward(i, kp - k, m);
          const double* nu_i = nu.row(i, kp);
          double nui = lerp_row(nu_i, ns, x);
          double hsum = 0.0;
          for (int j = 0; j < modes; ++j) {
            if (j == i) continue;
            double nuj = lerp_row(nu.row(j, kp), ns, x);
            hsum += hamiltonian(nuj - nui + Lam(j, kp) - Lam(i, kp));
          }
          const double* c_i = &ctx.c_grid[(static_cast<size_t>(i) * (nt + 1) + kp) * (ns + 1)];
          f[kp] = lerp_row(c_i, ns, x) - hsum;
        }
        double acc = 0.5 * (f[k] + f[nt]);
        for (int kp = k + 1; kp < nt; ++kp) acc += f[kp];
        out.at(i, k, m) = acc * dt + ctx.g_at(i, k, m);
      }
    }
  }
  return out;
}

double truncate_value(double x, double M) {
  double a = std::abs(x), sign = x < 0.0 ? -1.0 : 1.0;
  if (a <= M - 1.0) return x;
  if (a >= M) return sign * (M - 0.5);
  double u = a - (M - 1.0);  // in (0,1)
  return sign * (M - 1.0 + u - 0.5 * u * u);
}

void truncate_field(ValueField& f, double M) {
  for (double& v : f.raw()) v = truncate_value(v, M);
}

HJBResult picard_solve(const MultiplierPath& lambda, const HJBContext& ctx) {
  if (lambda.mass() >= ctx.cfg.delta)
    throw DeltaTooSmall("multiplier mass " + std::to_string(lambda.mass()) +
                        " is not below delta = " + std::to_string(ctx.cfg.delta));

  const GridSpec& grid = ctx.grid;
  const int modes = ctx.sc->mode_count();
  HJBResult res;
  res.nu = ValueField(modes, grid);
  for (int i = 0; i < modes; ++i)
    for (int k = 0; k <= grid.nt; ++k)
      for (int m = 0; m <= grid.ns; ++m) res.nu.at(i, k, m) = ctx.g_at(i, k, m);

  for (int it = 0; it < ctx.cfg.max_iter; ++it) {
    ValueField next = gamma_map(res.nu, lambda, ctx);
    truncate_field(next, ctx.consts.M);
    double resid = 0.0;
    const auto& a = next.raw();
    const auto& b = res.nu.raw();
    for (size_t q = 0; q < a.size(); ++q) resid = std::max(resid, std::abs(a[q] - b[q]));
    res.nu = std::move(next);
    res.residual_history.push_back(resid);
    res.iterations = it + 1;
    if (resid <= ctx.cfg.tol) {
      res.converged = true;
      break;
    }
  }

  std::vector<double> tail = lambda.tail_table();
  res.phi = res.nu;
  for (int i = 0; i < modes; ++i)
    for (int k = 0; k <= grid.nt; ++k) {
      double lam = tail[static_cast<size_t>(i) * (grid.nt + 1) + k];
      double* row = res.phi.row(i, k);
      for (int m = 0; m <= grid.ns; ++m) row[m] += lam;
    }
  return res;
}

HJBResult picard_solve(const MultiplierPath& lambda, const Scenario& sc, const GridSpec& grid,
                       const HJBConfig& cfg) {
  HJBContext ctx = HJBContext::build(sc, grid, cfg);
  return picard_solve(lambda, ctx);
}

ComparisonReport comparison_check(const ValueField& phi, const MultiplierPath& lambda,
                                  const HJBContext& ctx) {
  const GridSpec& grid = ctx.grid;
  const HJBConstants& c = ctx.consts;
  const double T = grid.horizon;
  const int modes = phi.modes();
  std::vector<double> tail = lambda.tail_table();
  ComparisonReport rep;
  rep.lower_margin = rep.upper_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < modes; ++i)
    for (int k = 0; k <= grid.nt; ++k) {
      double rem = T - grid.t(k);
      double lo = -c.gmax - rem * (c.cmax + modes * hamiltonian(ctx.cfg.delta));
      double hi = c.gmax + rem * c.cmax + tail[static_cast<size_t>(i) * (grid.nt + 1) + k];
      for (int m = 0; m <= grid.ns; ++m) {
        double v = phi.at(i, k, m);
        rep.lower_margin = std::min(rep.lower_margin, v - lo);
        rep.upper_margin = std::min(rep.upper_margin, hi - v);
      }
    }
  rep.ok = rep.lower_margin >= -1e-9 && rep.upper_margin >= -1e-9;
  return rep;
}

}  // namespace mfc
