#pragma once

#include <stdexcept>
#include <string>

#include "mfswitch/dual_ascent.hpp"
#include "mfswitch/fields.hpp"
#include "mfswitch/grid.hpp"

namespace mfc {

struct ArtifactIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Conventional file names inside a solve output directory.
struct ArtifactPaths {
  std::string m_csv, phi_csv, alpha_csv, lambda_csv, report_json, convergence_jsonl;
  static ArtifactPaths in_dir(const std::string& dir);
};

// Node fields go out as "mode,t,s,value" rows, row-major in (mode, t, s),
// 17 significant digits.  Readers accept rows in any order and locate the
// node by rounding t/s to the declared grid; they throw ArtifactIoError on
// missing files, malformed rows, off-grid coordinates, or wrong row counts.
void write_mode_field_csv(const std::string& path, const ModeField& field);
ModeField read_mode_field_csv(const std::string& path, int modes, const GridSpec& grid);

// Controls go out as "from,to,t,s,value" with zero-based mode indices.
void write_control_csv(const std::string& path, const ControlField& field);
ControlField read_control_csv(const std::string& path, int modes, const GridSpec& grid);

// Multipliers go out as "mode,t_start,t_end,density", one row per time cell.
void write_multiplier_csv(const std::string& path, const MultiplierPath& lambda);
MultiplierPath read_multiplier_csv(const std::string& path, int modes, const GridSpec& grid);

// One JSON object per outer iteration: {iter, dual, primal, gap, comp_resid,
// lambda_mass, step}.
std::string convergence_line(const OuterIterate& it);

std::string format_full(double v);  // shortest-17-significant-digit decimal

}  // namespace mfc
