#include "mfswitch/dual_ascent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfc {

namespace {

// Trapezoid of f(s) m0_i(s) over [0,1] at grid resolution.
double pair_initial(const Scenario& sc, int i, const double* row, const GridSpec& grid) {
  double acc = 0.0;
  for (int q = 0; q <= grid.ns; ++q) {
    double w = (q == 0 || q == grid.ns) ? 0.5 : 1.0;
    acc += w * row[q] * sc.initial_density(i, grid.s(q));
  }
  return acc * grid.ds();
}

}  // namespace

DualObjective dual_objective(const MultiplierPath& lambda, const HJBContext& ctx) {
  DualObjective out;
  out.hjb = picard_solve(lambda, ctx);
  const Scenario& sc = *ctx.sc;
  const GridSpec& grid = ctx.grid;
  double acc = 0.0;
  for (int i = 0; i < sc.mode_count(); ++i) {
    acc -= pair_initial(sc, i, out.hjb.phi.row(i, 0), grid);
    for (int k = 0; k < grid.nt; ++k) {
      double Dbar = 0.5 * (sc.capacity(i, grid.t(k)) + sc.capacity(i, grid.t(k + 1)));
      acc += lambda.density(i, k) * grid.dt() * Dbar;
    }
  }
  out.value = acc;
  return out;
}

std::vector<double> subgradient(const DensityField& m, const Scenario& sc,
                                const GridSpec& grid) {
  std::vector<double> g(static_cast<size_t>(m.modes()) * grid.nt);
  for (int i = 0; i < m.modes(); ++i)
    for (int k = 0; k < grid.nt; ++k)
      g[static_cast<size_t>(i) * grid.nt + k] =
          sc.capacity(i, grid.t(k)) - mode_mass(m, i, k);
  return g;
}

MultiplierPath mollify(const MultiplierPath& lambda, double width) {
  MultiplierPath out = lambda;
  if (width <= 0.0) return out;
  const int cells = lambda.cells();
  const double dt = lambda.dt();
  const int w = std::max(1, static_cast<int>(std::ceil(width / dt)));

  // Smooth bump kernel on (0,1), sampled at cell offsets 0..w and normalized.
  std::vector<double> kernel(w + 1);
  double total = 0.0;
  for (int q = 0; q <= w; ++q) {
    double u = (q + 0.5) / (w + 1);
    kernel[q] = std::exp(-1.0 / (u * (1.0 - u)));
    total += kernel[q];
  }
  for (double& v : kernel) v /= total;

  for (int i = 0; i < lambda.modes(); ++i) {
    std::vector<double> smoothed(cells, 0.0);
    for (int k = 0; k < cells; ++k) {
      double mass = lambda.density(i, k);
      if (mass == 0.0) continue;
      for (int q = 0; q <= w; ++q) {
        int dest = k + q;
        if (dest >= cells) dest = cells - 1;  // keep mass inside the horizon
        smoothed[dest] += mass * kernel[q];
      }
    }
    for (int k = 0; k < cells; ++k) out.density(i, k) = smoothed[k];
  }
  return out;
}

LambdaMassBound lambda_mass_bound(const MultiplierPath& lambda, double dual_value,
                                  const Scenario& sc, const GridSpec& grid, int flow_steps) {
  // Uncontrolled transport: mode masses never move, only the spatial profile.
  ControlField zero(sc.mode_count(), grid);
  FPResult rho = solve_fp(zero, sc, grid, FPConfig{1e-12, 200, flow_steps});

  double Ksum = 0.0;
  for (int i = 0; i < sc.mode_count(); ++i) {
    const double* rT = rho.m.row(i, grid.nt);
    double term = 0.0;
    for (int q = 0; q <= grid.ns; ++q)
      term += ((q == 0 || q == grid.ns) ? 0.5 : 1.0) * sc.terminal_cost(i, grid.s(q)) * rT[q];
    Ksum += term * grid.ds();
    for (int k = 0; k <= grid.nt; ++k) {
      const double* rk = rho.m.row(i, k);
      double slab = 0.0;
      for (int q = 0; q <= grid.ns; ++q)
        slab += ((q == 0 || q == grid.ns) ? 0.5 : 1.0) *
                sc.running_cost(i, grid.t(k), grid.s(q)) * rk[q];
      Ksum += ((k == 0 || k == grid.nt) ? 0.5 : 1.0) * slab * grid.ds() * grid.dt();
    }
  }

  LambdaMassBound out;
  double slack = capacity_slack(sc, grid);
  // The numerator dominates slack * mass >= 0 exactly; quadrature noise can
  // leave it barely negative, so clamp before dividing.
  out.bound = std::max(dual_value + Ksum, 0.0) / std::max(slack, 1e-12);
  out.ok = lambda.mass() <= out.bound + 1e-12;
  return out;
}

DualResult solve_dual(const Scenario& sc, const GridSpec& grid, const DualConfig& cfg) {
  DualResult res;
  MultiplierPath lambda(sc.mode_count(), grid);
  double best_score = std::numeric_limits<double>::infinity();

  int hjb_sweeps = 0, fp_sweeps = 0;
  HJBConfig hjb_cfg{2.0 * lambda.mass() + 1.0, cfg.hjb_tol, cfg.max_inner, cfg.flow_steps};
  HJBContext ctx = HJBContext::build(sc, grid, hjb_cfg);

  for (int iter = 1; iter <= cfg.max_outer; ++iter) {
    double delta = 2.0 * lambda.mass() + 1.0;
    if (delta != ctx.cfg.delta) {
      // The truncation radius enters the constants only; tables survive.
      ctx.cfg.delta = delta;
      ctx.consts = hjb_constants(sc, delta, grid);
    }

    DualObjective dual = dual_objective(lambda, ctx);
    hjb_sweeps += dual.hjb.iterations;
    ControlField alpha = control_from_value(dual.hjb.phi);
    FPResult fp = solve_fp(alpha, sc, ctx.atlas, FPConfig{cfg.fp_tol, 200, cfg.flow_steps});
    fp_sweeps += fp.iterations;
    double primal = primal_cost(fp.m, alpha, sc);
    double gap = duality_gap(primal, dual.value);

    double comp = 0.0, feas = 0.0;
    for (int i = 0; i < sc.mode_count(); ++i)
      for (int k = 0; k < grid.nt; ++k) {
        double slack_k = sc.capacity(i, grid.t(k)) - mode_mass(fp.m, i, k);
        comp += lambda.density(i, k) * grid.dt() * slack_k;
        feas = std::max(feas, -slack_k);
      }
    for (int i = 0; i < sc.mode_count(); ++i)
      feas = std::max(feas, mode_mass(fp.m, i, grid.nt) - sc.capacity(i, grid.horizon));
    comp = std::abs(comp);

    double step = cfg.step0 / std::sqrt(static_cast<double>(iter));
    res.log.push_back({iter, dual.value, primal, gap, comp, lambda.mass(), step, feas});
    res.outer_iterations = iter;
    if (cfg.on_iterate) cfg.on_iterate(res.log.back());

    // An infeasible response makes the raw gap meaningless (lambda = 0 pairs
    // the costs exactly), so feasibility weighs into iterate selection and
    // the stopping rule.
    double score = std::abs(gap) / (1.0 + std::abs(primal)) + comp + feas;
    if (score < best_score) {
      best_score = score;
      res.best = DualState{lambda, dual.hjb.phi, fp.m, std::move(alpha), dual.value, primal};
    }

    if (std::abs(gap) <= cfg.gap_tol * (1.0 + std::abs(primal)) && comp <= cfg.gap_tol &&
        feas <= cfg.feas_tol) {
      res.converged = true;
      break;
    }
    if (iter == cfg.max_outer) break;

    std::vector<double> g = subgradient(fp.m, sc, grid);
    for (int i = 0; i < sc.mode_count(); ++i)
      for (int k = 0; k < grid.nt; ++k) {
        double& d = lambda.density(i, k);
        d = std::max(0.0, d - step * g[static_cast<size_t>(i) * grid.nt + k]);
      }
  }

  res.report.primal_cost = res.best.primal_value;
  res.report.dual_value = res.best.dual_value;
  res.report.gap = duality_gap(res.best.primal_value, res.best.dual_value);
  res.report.kinetic_gamma = kinetic_gamma(res.best.m, res.best.alpha);
  double mass_err = 0.0;
  for (int k = 0; k <= grid.nt; ++k) {
    double total = 0.0;
    for (int i = 0; i < sc.mode_count(); ++i) total += mode_mass(res.best.m, i, k);
    mass_err = std::max(mass_err, std::abs(total - 1.0));
  }
  res.report.fp_mass_err = mass_err;
  KKTResiduals kkt = kkt_residuals(res.best.phi, res.best.lambda, res.best.m, res.best.alpha,
                                   sc, ctx.cfg);
  res.kkt = kkt;
  res.delta = ctx.cfg.delta;
  res.report.comp_resid = kkt.complementarity;
  res.report.hjb_resid = kkt.hjb;
  res.report.constraint_violation = kkt.feasibility;
  res.report.iterations["outer"] = res.outer_iterations;
  res.report.iterations["hjb"] = hjb_sweeps;
  res.report.iterations["fp"] = fp_sweeps;
  return res;
}

}  // namespace mfc
