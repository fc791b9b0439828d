#pragma once

#include <cstdint>
#include <string>

namespace mfc {

// Exit codes shared by all subcommands:
//   0 success, 1 scenario validation failure, 2 solve/check did not meet
//   its thresholds (artifacts still written), 3 I/O or corrupt input.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitNotConverged = 2,
  kExitIo = 3,
};

struct RunConfig {
  std::string scenario_path;  // empty when a preset is selected
  std::string preset;         // empty when a file is given
  int nt = 64;
  int ns = 64;
  double tol = 1e-10;      // inner Picard tolerance (value-function sweeps)
  double gap_tol = 1e-2;   // duality-gap stopping threshold
  double step0 = 1.0;      // initial multiplier step (decays as step0/sqrt(iter))
  int max_outer = 200;
  int flow_steps = 4;      // integrator substeps per grid cell
  std::string out_dir = "out";
  uint64_t seed = 1;
};

// Solves the scenario and writes m.csv, phi.csv, alpha.csv, lambda.csv,
// report.json, convergence.jsonl into cfg.out_dir.
int cmd_solve(const RunConfig& cfg);

// Recomputes the optimality residuals from a solve directory and compares
// them against the thresholds recorded in report.json.
int cmd_check(const std::string& dir);

// Runs the solver and the brute-force discretization on the same coarse grid
// and compares primal values to 2e-2 * (1 + |oracle value|).
int cmd_oracle(const RunConfig& cfg);

}  // namespace mfc
