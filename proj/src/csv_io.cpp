#include "mfswitch/csv_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace mfc {

namespace {

void split_line(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_number(const std::string& tok, const std::string& path) {
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ArtifactIoError(path + ": malformed number '" + tok + "'");
  }
}

int parse_index(const std::string& tok, int limit, const std::string& path) {
  double v = parse_number(tok, path);
  int n = static_cast<int>(std::llround(v));
  if (n != v || n < 0 || n >= limit)
    throw ArtifactIoError(path + ": index '" + tok + "' out of range");
  return n;
}

// Maps a coordinate to its node index on a uniform axis, or throws.
int locate(double coord, double spacing, int nodes, const std::string& path) {
  int k = static_cast<int>(std::llround(coord / spacing));
  if (k < 0 || k >= nodes || std::abs(coord - k * spacing) > 1e-9 * std::max(1.0, spacing * nodes))
    throw ArtifactIoError(path + ": coordinate off the declared grid");
  return k;
}

std::ifstream open_reader(const std::string& path, const char* header) {
  std::ifstream in(path);
  if (!in) throw ArtifactIoError(path + ": cannot open for reading");
  std::string line;
  if (!std::getline(in, line)) throw ArtifactIoError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header)
    throw ArtifactIoError(path + ": expected header '" + std::string(header) + "'");
  return in;
}

std::ofstream open_writer(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ArtifactIoError(path + ": cannot open for writing");
  return out;
}

bool next_row(std::ifstream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

}  // namespace

ArtifactPaths ArtifactPaths::in_dir(const std::string& dir) {
  std::string base = dir.empty() || dir.back() == '/' ? dir : dir + "/";
  return ArtifactPaths{base + "m.csv",      base + "phi.csv",
                       base + "alpha.csv",  base + "lambda.csv",
                       base + "report.json", base + "convergence.jsonl"};
}

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_mode_field_csv(const std::string& path, const ModeField& field) {
  auto out = open_writer(path);
  const GridSpec& grid = field.grid();
  out << "mode,t,s,value\n";
  for (int i = 0; i < field.modes(); ++i)
    for (int k = 0; k <= grid.nt; ++k)
      for (int m = 0; m <= grid.ns; ++m)
        out << i << ',' << format_full(grid.t(k)) << ',' << format_full(grid.s(m)) << ','
            << format_full(field.at(i, k, m)) << '\n';
  if (!out) throw ArtifactIoError(path + ": write failed");
}

ModeField read_mode_field_csv(const std::string& path, int modes, const GridSpec& grid) {
  auto in = open_reader(path, "mode,t,s,value");
  ModeField field(modes, grid);
  std::vector<char> seen(field.raw().size(), 0);
  std::string line;
  std::vector<std::string> tok;
  size_t rows = 0;
  while (next_row(in, line)) {
    split_line(line, tok);
    if (tok.size() != 4) throw ArtifactIoError(path + ": expected 4 columns");
    int i = parse_index(tok[0], modes, path);
    int k = locate(parse_number(tok[1], path), grid.dt(), grid.nt + 1, path);
    int m = locate(parse_number(tok[2], path), grid.ds(), grid.ns + 1, path);
    size_t idx = (static_cast<size_t>(i) * (grid.nt + 1) + k) * (grid.ns + 1) + m;
    if (seen[idx]) throw ArtifactIoError(path + ": duplicate node row");
    seen[idx] = 1;
    field.at(i, k, m) = parse_number(tok[3], path);
    ++rows;
  }
  if (rows != seen.size()) throw ArtifactIoError(path + ": wrong row count");
  return field;
}

void write_control_csv(const std::string& path, const ControlField& field) {
  auto out = open_writer(path);
  const GridSpec& grid = field.grid();
  out << "from,to,t,s,value\n";
  for (int i = 0; i < field.modes(); ++i)
    for (int j = 0; j < field.modes(); ++j) {
      if (j == i) continue;
      for (int k = 0; k <= grid.nt; ++k)
        for (int m = 0; m <= grid.ns; ++m)
          out << i << ',' << j << ',' << format_full(grid.t(k)) << ',' << format_full(grid.s(m))
              << ',' << format_full(field.at(i, j, k, m)) << '\n';
    }
  if (!out) throw ArtifactIoError(path + ": write failed");
}

ControlField read_control_csv(const std::string& path, int modes, const GridSpec& grid) {
  auto in = open_reader(path, "from,to,t,s,value");
  ControlField field(modes, grid);
  std::vector<char> seen(field.raw().size(), 0);
  std::string line;
  std::vector<std::string> tok;
  size_t rows = 0;
  while (next_row(in, line)) {
    split_line(line, tok);
    if (tok.size() != 5) throw ArtifactIoError(path + ": expected 5 columns");
    int i = parse_index(tok[0], modes, path);
    int j = parse_index(tok[1], modes, path);
    if (i == j) throw ArtifactIoError(path + ": self-switch row");
    int k = locate(parse_number(tok[2], path), grid.dt(), grid.nt + 1, path);
    int m = locate(parse_number(tok[3], path), grid.ds(), grid.ns + 1, path);
    size_t idx = (static_cast<size_t>(field.pair_index(i, j)) * (grid.nt + 1) + k) *
                     (grid.ns + 1) + m;
    if (seen[idx]) throw ArtifactIoError(path + ": duplicate node row");
    seen[idx] = 1;
    field.at(i, j, k, m) = parse_number(tok[4], path);
    ++rows;
  }
  if (rows != seen.size()) throw ArtifactIoError(path + ": wrong row count");
  return field;
}

void write_multiplier_csv(const std::string& path, const MultiplierPath& lambda) {
  auto out = open_writer(path);
  out << "mode,t_start,t_end,density\n";
  for (int i = 0; i < lambda.modes(); ++i)
    for (int k = 0; k < lambda.cells(); ++k)
      out << i << ',' << format_full(k * lambda.dt()) << ',' << format_full((k + 1) * lambda.dt())
          << ',' << format_full(lambda.density(i, k)) << '\n';
  if (!out) throw ArtifactIoError(path + ": write failed");
}

MultiplierPath read_multiplier_csv(const std::string& path, int modes, const GridSpec& grid) {
  auto in = open_reader(path, "mode,t_start,t_end,density");
  MultiplierPath lambda(modes, grid);
  std::vector<char> seen(lambda.raw().size(), 0);
  std::string line;
  std::vector<std::string> tok;
  size_t rows = 0;
  while (next_row(in, line)) {
    split_line(line, tok);
    if (tok.size() != 4) throw ArtifactIoError(path + ": expected 4 columns");
    int i = parse_index(tok[0], modes, path);
    int k = locate(parse_number(tok[1], path), grid.dt(), grid.nt, path);
    double t_end = parse_number(tok[2], path);
    if (std::abs(t_end - (k + 1) * grid.dt()) > 1e-9 * std::max(1.0, grid.horizon))
      throw ArtifactIoError(path + ": cell endpoints disagree with the grid");
    size_t idx = static_cast<size_t>(i) * grid.nt + k;
    if (seen[idx]) throw ArtifactIoError(path + ": duplicate cell row");
    seen[idx] = 1;
    lambda.density(i, k) = parse_number(tok[3], path);
    ++rows;
  }
  if (rows != seen.size()) throw ArtifactIoError(path + ": wrong row count");
  return lambda;
}

std::string convergence_line(const OuterIterate& it) {
  std::ostringstream os;
  os << "{\"iter\":" << it.iter << ",\"dual\":" << format_full(it.dual)
     << ",\"primal\":" << format_full(it.primal) << ",\"gap\":" << format_full(it.gap)
     << ",\"comp_resid\":" << format_full(it.comp_resid)
     << ",\"lambda_mass\":" << format_full(it.lambda_mass)
     << ",\"step\":" << format_full(it.step) << "}";
  return os.str();
}

}  // namespace mfc
