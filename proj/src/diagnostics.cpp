#include "mfswitch/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mfswitch/interp.hpp"

namespace mfc {

double running_cost_L(double x) {
  if (x < 0.0) return std::numeric_limits<double>::infinity();
  return 0.5 * x * x;
}

double primal_cost(const DensityField& m, const ControlField& alpha, const Scenario& sc) {
  const GridSpec& grid = m.grid();
  const int modes = m.modes();
  const int nt = grid.nt, ns = grid.ns;
  const double dt = grid.dt(), ds = grid.ds();

  for (double a : alpha.raw())
    if (a < 0.0) throw InfeasibleControl("negative switching rate");

  double total = 0.0;
  for (int i = 0; i < modes; ++i) {
    for (int k = 0; k <= nt; ++k) {
      const double* mi = m.row(i, k);
      double slab = 0.0;
      for (int q = 0; q <= ns; ++q) {
        double rate_cost = 0.0;
        for (int j = 0; j < modes; ++j) {
          if (j == i) continue;
          double a = alpha.at(i, j, k, q);
          rate_cost += 0.5 * a * a;
        }
        double integrand = (sc.running_cost(i, grid.t(k), grid.s(q)) + rate_cost) * mi[q];
        slab += ((q == 0 || q == ns) ? 0.5 : 1.0) * integrand;
      }
      total += ((k == 0 || k == nt) ? 0.5 : 1.0) * slab * ds * dt;
    }
    const double* mT = m.row(i, nt);
    double term = 0.0;
    for (int q = 0; q <= ns; ++q)
      term += ((q == 0 || q == ns) ? 0.5 : 1.0) * sc.terminal_cost(i, grid.s(q)) * mT[q];
    total += term * ds;
  }
  return total;
}

double duality_gap(double primal, double dual) { return dual + primal; }

double kinetic_gamma(const DensityField& m, const ControlField& alpha) {
  const GridSpec& grid = m.grid();
  const int modes = m.modes();
  const int nt = grid.nt, ns = grid.ns;
  double total = 0.0;
  for (int i = 0; i < modes; ++i)
    for (int j = 0; j < modes; ++j) {
      if (j == i) continue;
      for (int k = 0; k <= nt; ++k) {
        const double* mi = m.row(i, k);
        const double* a = alpha.row(i, j, k);
        double slab = 0.0;
        for (int q = 0; q <= ns; ++q)
          slab += ((q == 0 || q == ns) ? 0.5 : 1.0) * 0.5 * a[q] * a[q] * mi[q];
        total += ((k == 0 || k == nt) ? 0.5 : 1.0) * slab * grid.ds() * grid.dt();
      }
    }
  return total;
}

KKTResiduals kkt_residuals(const ValueField& phi, const MultiplierPath& lambda,
                           const DensityField& m, const ControlField& alpha, const Scenario& sc,
                           const HJBConfig& cfg) {
  const GridSpec& grid = phi.grid();
  const int modes = phi.modes();
  const int nt = grid.nt, ns = grid.ns;
  KKTResiduals r;

  // (a) Backward-equation defect: rebuild nu from phi, apply the integral
  // operator once, and take the node-wise defect per unit of remaining time.
  HJBContext ctx = HJBContext::build(sc, grid, cfg);
  std::vector<double> tail = lambda.tail_table();
  ValueField nu = phi;
  for (int i = 0; i < modes; ++i)
    for (int k = 0; k <= nt; ++k) {
      double lam = tail[static_cast<size_t>(i) * (nt + 1) + k];
      double* row = nu.row(i, k);
      for (int q = 0; q <= ns; ++q) row[q] -= lam;
    }
  ValueField gnu = gamma_map(nu, lambda, ctx);
  for (int i = 0; i < modes; ++i)
    for (int k = 0; k <= nt; ++k) {
      double rem = std::max(grid.horizon - grid.t(k), grid.dt());
      for (int q = 0; q <= ns; ++q)
        r.hjb = std::max(r.hjb, std::abs(gnu.at(i, k, q) - nu.at(i, k, q)) / rem);
    }

  // (b) Transport defect: re-simulate under the stored control.
  FPResult resim = solve_fp(alpha, sc, ctx.atlas, FPConfig{1e-12, 200, cfg.flow_steps});
  for (size_t q = 0; q < m.raw().size(); ++q)
    r.fp = std::max(r.fp, std::abs(m.raw()[q] - resim.m.raw()[q]));

  // (c) Feedback-control identity on the support of m.
  for (int i = 0; i < modes; ++i)
    for (int j = 0; j < modes; ++j) {
      if (j == i) continue;
      for (int k = 0; k <= nt; ++k) {
        const double* mi = m.row(i, k);
        const double* pi = phi.row(i, k);
        const double* pj = phi.row(j, k);
        const double* a = alpha.row(i, j, k);
        for (int q = 0; q <= ns; ++q) {
          if (mi[q] <= 1e-8) continue;
          r.control = std::max(r.control, std::abs(a[q] - std::max(pi[q] - pj[q], 0.0)));
        }
      }
    }

  // (d) Capacity feasibility and (e) complementarity.
  double comp = 0.0;
  for (int i = 0; i < modes; ++i) {
    for (int k = 0; k <= nt; ++k) {
      double excess = mode_mass(m, i, k) - sc.capacity(i, grid.t(k));
      r.feasibility = std::max(r.feasibility, std::max(excess, 0.0));
    }
    for (int k = 0; k < nt; ++k) {
      double slack = sc.capacity(i, grid.t(k)) - mode_mass(m, i, k);
      comp += lambda.density(i, k) * grid.dt() * slack;
    }
  }
  r.complementarity = std::abs(comp);
  return r;
}

nlohmann::json SolveReport::to_json() const {
  nlohmann::json doc;
  doc["primal_cost"] = primal_cost;
  doc["dual_value"] = dual_value;
  doc["gap"] = gap;
  doc["comp_resid"] = comp_resid;
  doc["hjb_resid"] = hjb_resid;
  doc["fp_mass_err"] = fp_mass_err;
  doc["constraint_violation"] = constraint_violation;
  doc["kinetic_gamma"] = kinetic_gamma;
  doc["iterations"] = iterations;
  return doc;
}

SolveReport SolveReport::from_json(const nlohmann::json& doc) {
  SolveReport r;
  r.primal_cost = doc.at("primal_cost").get<double>();
  r.dual_value = doc.at("dual_value").get<double>();
  r.gap = doc.at("gap").get<double>();
  r.comp_resid = doc.at("comp_resid").get<double>();
  r.hjb_resid = doc.at("hjb_resid").get<double>();
  r.fp_mass_err = doc.at("fp_mass_err").get<double>();
  r.constraint_violation = doc.at("constraint_violation").get<double>();
  r.kinetic_gamma = doc.at("kinetic_gamma").get<double>();
  if (doc.contains("iterations"))
    r.iterations = doc["iterations"].get<std::map<std::string, int>>();
  return r;
}

DisplacementCheck displacement_bound_check(const DensityField& m, const Scenario& sc,
                                           double gamma, int ntests, uint64_t seed) {
  const GridSpec& grid = m.grid();
  const int modes = m.modes();
  const int nt = grid.nt, ns = grid.ns;
  const double T = grid.horizon, ds = grid.ds();

  double bmax = 0.0;
  for (int i = 0; i < modes; ++i)
    for (int q = 0; q <= 4 * ns; ++q)
      bmax = std::max(bmax, std::abs(sc.velocity(i, static_cast<double>(q) / (4 * ns))));
  const double speed = std::sqrt(T) * modes * bmax + std::sqrt(std::max(2.0 * gamma, 0.0));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  DisplacementCheck out;
  std::vector<double> psi(static_cast<size_t>(modes) * (ns + 1));
  std::vector<double> u(nt + 1);
  for (int trial = 0; trial < ntests; ++trial) {
    // Piecewise-linear psi_i: random slopes in [-1,1] per cell, clamped to
    // [-1,1], so both the sup bound and the Lipschitz bound hold.
    for (int i = 0; i < modes; ++i) {
      double v = unif(rng);
      psi[static_cast<size_t>(i) * (ns + 1)] = v;
      for (int q = 1; q <= ns; ++q) {
        v = std::clamp(v + unif(rng) * ds, -1.0, 1.0);
        psi[static_cast<size_t>(i) * (ns + 1) + q] = v;
      }
    }
    // The estimate treats a mode hop as one unit of transport distance, so
    // admissible tests also satisfy |psi_i(s) - psi_j(s)| <= 1 for every
    // pair. Shrink the draw onto that set; scaling by 1/spread keeps the
    // sup and Lipschitz bounds intact.
    double spread = 0.0;
    for (int i = 0; i < modes; ++i) {
      for (int j = i + 1; j < modes; ++j) {
        for (int q = 0; q <= ns; ++q) {
          spread = std::max(spread,
                            std::abs(psi[static_cast<size_t>(i) * (ns + 1) + q] -
                                     psi[static_cast<size_t>(j) * (ns + 1) + q]));
        }
      }
    }
    if (spread > 1.0) {
      for (double& value : psi) value /= spread;
    }
    for (int k = 0; k <= nt; ++k) {
      double acc = 0.0;
      for (int i = 0; i < modes; ++i) {
        const double* mi = m.row(i, k);
        const double* pi = &psi[static_cast<size_t>(i) * (ns + 1)];
        double slab = 0.0;
        for (int q = 0; q <= ns; ++q)
          slab += ((q == 0 || q == ns) ? 0.5 : 1.0) * pi[q] * mi[q];
        acc += slab * ds;
      }
      u[k] = acc;
    }
    for (int k = 0; k <= nt; ++k)
      for (int kp = k + 1; kp <= nt; ++kp) {
        double lhs = std::abs(u[kp] - u[k]);
        double rhs = std::sqrt(grid.t(kp) - grid.t(k)) * speed;
        if (rhs <= 0.0) continue;
        out.worst_ratio = std::max(out.worst_ratio, lhs / rhs);
      }
  }
  out.ok = out.worst_ratio <= 1.0 + 1e-9;
  return out;
}

}  // namespace mfc
