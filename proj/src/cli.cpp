#include "mfswitch/cli.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <json.hpp>

#include "mfswitch/csv_io.hpp"
#include "mfswitch/diagnostics.hpp"
#include "mfswitch/dual_ascent.hpp"
#include "mfswitch/oracle.hpp"
#include "mfswitch/scenario.hpp"

namespace mfc {

namespace {

constexpr const char* kResidualNames[5] = {"hjb", "fp", "control", "feasibility",
                                           "complementarity"};

std::array<double, 5> residual_values(const KKTResiduals& kkt) {
  return {kkt.hjb, kkt.fp, kkt.control, kkt.feasibility, kkt.complementarity};
}

// Loads the scenario named by the config; callers map exceptions to exits.
Scenario load_from_config(const RunConfig& cfg) {
  if (!cfg.preset.empty()) return preset(cfg.preset);
  if (cfg.scenario_path.empty())
    throw ScenarioDomainError("either --scenario or --preset is required");
  return load_scenario(cfg.scenario_path);
}

// Returns nullopt and prints violations when the scenario fails validation.
std::optional<std::pair<Scenario, GridSpec>> prepare(const RunConfig& cfg, int& exit_code) {
  if (!cfg.preset.empty() && !cfg.scenario_path.empty()) {
    std::cerr << "error: --scenario and --preset are mutually exclusive\n";
    exit_code = kExitValidation;
    return std::nullopt;
  }
  if (cfg.preset.empty() && !cfg.scenario_path.empty() &&
      !std::filesystem::exists(cfg.scenario_path)) {
    std::cerr << "error: scenario file not found: " << cfg.scenario_path << "\n";
    exit_code = kExitIo;
    return std::nullopt;
  }
  try {
    Scenario sc = load_from_config(cfg);
    GridSpec grid = GridSpec::make(cfg.nt, cfg.ns, sc.horizon());
    auto violations = validate_scenario(sc, grid);
    if (!violations.empty()) {
      std::cerr << "scenario rejected; " << violations.size() << " assumption violation(s):\n";
      for (const auto& v : violations)
        std::cerr << "  assumption " << v.assumption << " mode " << v.mode << " at (t=" << v.t
                  << ", s=" << v.s << "): " << v.detail << "\n";
      exit_code = kExitValidation;
      return std::nullopt;
    }
    return std::make_pair(std::move(sc), grid);
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    exit_code = kExitValidation;
    return std::nullopt;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    exit_code = kExitValidation;
    return std::nullopt;
  }
}

nlohmann::json grid_json(const GridSpec& grid) {
  return {{"nt", grid.nt}, {"ns", grid.ns}, {"horizon", grid.horizon}};
}

GridSpec grid_from_json(const nlohmann::json& doc) {
  return GridSpec::make(doc.at("nt").get<int>(), doc.at("ns").get<int>(),
                        doc.at("horizon").get<double>());
}

void print_iterate(const OuterIterate& it) {
  std::printf("iter %3d  dual % .6e  primal % .6e  gap % .3e  comp %.3e  |lambda| %.3e\n",
              it.iter, it.dual, it.primal, it.gap, it.comp_resid, it.lambda_mass);
}

}  // namespace

int cmd_solve(const RunConfig& cfg) {
  int exit_code = kExitOk;
  auto prep = prepare(cfg, exit_code);
  if (!prep) return exit_code;
  const Scenario& sc = prep->first;
  const GridSpec& grid = prep->second;

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory " << cfg.out_dir << ": " << ec.message()
              << "\n";
    return kExitIo;
  }
  ArtifactPaths paths = ArtifactPaths::in_dir(cfg.out_dir);
  std::ofstream conv(paths.convergence_jsonl);
  if (!conv) {
    std::cerr << "error: cannot open " << paths.convergence_jsonl << "\n";
    return kExitIo;
  }

  DualConfig dcfg;
  dcfg.step0 = cfg.step0;
  dcfg.gap_tol = cfg.gap_tol;
  dcfg.max_outer = cfg.max_outer;
  dcfg.hjb_tol = cfg.tol;
  dcfg.fp_tol = cfg.tol * 0.1;
  dcfg.flow_steps = cfg.flow_steps;
  dcfg.on_iterate = [&conv](const OuterIterate& it) {
    conv << convergence_line(it) << '\n';
    conv.flush();
    print_iterate(it);
  };

  DualResult res;
  try {
    res = solve_dual(sc, grid, dcfg);
  } catch (const std::exception& e) {
    std::cerr << "solver failed: " << e.what() << "\n";
    return kExitNotConverged;
  }

  try {
    write_mode_field_csv(paths.m_csv, res.best.m);
    write_mode_field_csv(paths.phi_csv, res.best.phi);
    write_control_csv(paths.alpha_csv, res.best.alpha);
    write_multiplier_csv(paths.lambda_csv, res.best.lambda);

    nlohmann::json doc = res.report.to_json();
    doc["converged"] = res.converged;
    doc["grid"] = grid_json(grid);
    doc["config"] = {{"tol", cfg.tol},       {"gap_tol", cfg.gap_tol},
                     {"max_outer", cfg.max_outer}, {"flow_steps", cfg.flow_steps},
                     {"seed", cfg.seed},     {"delta", res.delta}};
    auto vals = residual_values(res.kkt);
    // Floors keep the re-check immune to harmless rounding; feasibility gets
    // the success bar itself.
    const double floors[5] = {1e-8, 1e-8, 1e-8, 1e-3, 1e-8};
    nlohmann::json residuals, thresholds;
    for (int q = 0; q < 5; ++q) {
      residuals[kResidualNames[q]] = vals[q];
      thresholds[kResidualNames[q]] = std::max(2.0 * vals[q], floors[q]);
    }
    doc["residuals"] = residuals;
    doc["thresholds"] = thresholds;
    doc["scenario"] = sc.to_json();
    std::ofstream rep(paths.report_json);
    if (!rep) throw ArtifactIoError(paths.report_json + ": cannot open for writing");
    rep << doc.dump(2) << '\n';
    if (!rep) throw ArtifactIoError(paths.report_json + ": write failed");
  } catch (const ArtifactIoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }

  std::printf("primal % .9e\ndual   % .9e\ngap    % .3e  (tol %.1e)\n", res.report.primal_cost,
              res.report.dual_value, res.report.gap,
              cfg.gap_tol * (1.0 + std::abs(res.report.primal_cost)));
  std::printf("residuals: hjb %.3e  fp %.3e  control %.3e  feas %.3e  comp %.3e\n", res.kkt.hjb,
              res.kkt.fp, res.kkt.control, res.kkt.feasibility, res.kkt.complementarity);
  std::printf("mass error %.3e  outer iterations %d  converged %s\n", res.report.fp_mass_err,
              res.outer_iterations, res.converged ? "yes" : "no");

  bool ok = res.converged && res.kkt.feasibility <= 1e-3;
  return ok ? kExitOk : kExitNotConverged;
}

int cmd_check(const std::string& dir) {
  ArtifactPaths paths = ArtifactPaths::in_dir(dir);
  try {
    std::ifstream rep(paths.report_json);
    if (!rep) throw ArtifactIoError(paths.report_json + ": cannot open for reading");
    nlohmann::json doc = nlohmann::json::parse(rep);

    Scenario sc = Scenario::from_json(doc.at("scenario"));
    GridSpec grid = grid_from_json(doc.at("grid"));
    HJBConfig hcfg;
    hcfg.delta = doc.at("config").at("delta").get<double>();
    hcfg.tol = doc.at("config").at("tol").get<double>();
    hcfg.flow_steps = doc.at("config").at("flow_steps").get<int>();

    ValueField phi = read_mode_field_csv(paths.phi_csv, sc.mode_count(), grid);
    DensityField m = read_mode_field_csv(paths.m_csv, sc.mode_count(), grid);
    ControlField alpha = read_control_csv(paths.alpha_csv, sc.mode_count(), grid);
    MultiplierPath lambda = read_multiplier_csv(paths.lambda_csv, sc.mode_count(), grid);

    KKTResiduals kkt = kkt_residuals(phi, lambda, m, alpha, sc, hcfg);
    auto vals = residual_values(kkt);

    bool all_ok = true;
    std::printf("%-16s %-13s %-13s %s\n", "residual", "value", "threshold", "status");
    for (int q = 0; q < 5; ++q) {
      double bar = doc.at("thresholds").at(kResidualNames[q]).get<double>();
      bool ok = vals[q] <= bar;
      all_ok = all_ok && ok;
      std::printf("%-16s %-13.4e %-13.4e %s\n", kResidualNames[q], vals[q], bar,
                  ok ? "ok" : "EXCEEDED");
    }
    return all_ok ? kExitOk : kExitNotConverged;
  } catch (const ArtifactIoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: corrupt report.json: " << e.what() << "\n";
    return kExitIo;
  } catch (const ScenarioError& e) {
    std::cerr << "error: corrupt scenario in report.json: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: corrupt grid in report.json: " << e.what() << "\n";
    return kExitIo;
  }
}

int cmd_oracle(const RunConfig& cfg) {
  int exit_code = kExitOk;
  auto prep = prepare(cfg, exit_code);
  if (!prep) return exit_code;
  const Scenario& sc = prep->first;
  const GridSpec& grid = prep->second;

  OracleResult oracle;
  try {
    DiscreteProgram prog = build_discrete(sc, grid);
    oracle = solve_discrete(prog);
  } catch (const OracleTooLarge& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  DualConfig dcfg;
  dcfg.step0 = cfg.step0;
  dcfg.gap_tol = cfg.gap_tol;
  dcfg.max_outer = cfg.max_outer;
  dcfg.hjb_tol = cfg.tol;
  dcfg.fp_tol = cfg.tol * 0.1;
  dcfg.flow_steps = cfg.flow_steps;
  DualResult res;
  try {
    res = solve_dual(sc, grid, dcfg);
  } catch (const std::exception& e) {
    std::cerr << "solver failed: " << e.what() << "\n";
    return kExitNotConverged;
  }

  double diff = std::abs(res.report.primal_cost - oracle.value);
  double bound = 2e-2 * (1.0 + std::abs(oracle.value));
  std::printf("solver primal   % .9e\n", res.report.primal_cost);
  std::printf("oracle value    % .9e  (infeasibility %.2e, %d iterations, %s)\n", oracle.value,
              oracle.max_infeasibility, oracle.iterations,
              oracle.converged ? "converged" : "max iterations");
  std::printf("difference      %.4e  bound %.4e  %s\n", diff, bound,
              diff <= bound ? "ok" : "EXCEEDED");
  return diff <= bound ? kExitOk : kExitNotConverged;
}

}  // namespace mfc
