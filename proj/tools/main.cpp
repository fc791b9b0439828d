#include <string>

#include <CLI11.hpp>

#include "mfswitch/cli.hpp"

namespace {

void add_run_options(CLI::App* sub, mfc::RunConfig& cfg) {
  auto* scenario = sub->add_option("--scenario", cfg.scenario_path, "Scenario JSON file");
  auto* preset = sub->add_option("--preset", cfg.preset,
                                 "Built-in scenario: smart_charging, single_mode, "
                                 "symmetric_two_mode");
  scenario->excludes(preset);
  preset->excludes(scenario);
  sub->add_option("--nt", cfg.nt, "Time cells")->check(CLI::PositiveNumber);
  sub->add_option("--ns", cfg.ns, "Space cells")->check(CLI::PositiveNumber);
  sub->add_option("--tol", cfg.tol, "Inner fixed-point tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--gap-tol", cfg.gap_tol, "Duality-gap stopping threshold")
      ->check(CLI::PositiveNumber);
  sub->add_option("--step0", cfg.step0, "Initial multiplier ascent step")
      ->check(CLI::PositiveNumber);
  sub->add_option("--max-outer", cfg.max_outer, "Multiplier ascent iteration cap")
      ->check(CLI::PositiveNumber);
  sub->add_option("--flow-steps", cfg.flow_steps, "Integrator substeps per grid cell")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", cfg.out_dir, "Output directory");
  sub->add_option("--seed", cfg.seed, "Seed recorded for randomized diagnostics");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained mean-field optimal switching solver"};
  app.require_subcommand(1);

  mfc::RunConfig solve_cfg;
  auto* solve = app.add_subcommand("solve", "Solve a scenario and write artifacts");
  add_run_options(solve, solve_cfg);

  std::string check_dir;
  auto* check = app.add_subcommand("check", "Re-verify residuals of a solve directory");
  check->add_option("dir", check_dir, "Directory written by solve")->required();

  mfc::RunConfig oracle_cfg;
  oracle_cfg.nt = 8;
  oracle_cfg.ns = 8;
  auto* oracle = app.add_subcommand("oracle", "Compare against the brute-force discretization");
  add_run_options(oracle, oracle_cfg);

  CLI11_PARSE(app, argc, argv);

  if (solve->parsed()) return mfc::cmd_solve(solve_cfg);
  if (check->parsed()) return mfc::cmd_check(check_dir);
  if (oracle->parsed()) return mfc::cmd_oracle(oracle_cfg);
  return mfc::kExitValidation;
}
