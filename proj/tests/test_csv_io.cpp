#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "mfswitch/csv_io.hpp"
#include "mfswitch/fields.hpp"
#include "mfswitch/grid.hpp"

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("mfswitch_csv_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

void rewrite(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::trunc);
  for (const std::string& l : lines) out << l << "\n";
}

}  // namespace

TEST_CASE("mode field csv round-trips bit for bit") {
  TempDir tmp;
  mfc::GridSpec grid = mfc::GridSpec::make(5, 7, 2.0);
  mfc::ModeField f(2, grid);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  for (double& v : f.raw()) v = unif(rng);
  f.at(1, 2, 3) = 1.0 / 3.0;  // needs all 17 digits

  std::string path = tmp.file("m.csv");
  mfc::write_mode_field_csv(path, f);
  std::vector<std::string> lines = read_lines(path);
  CHECK(lines.at(0) == "mode,t,s,value");
  CHECK(lines.size() == 1 + 2 * 6 * 8);

  mfc::ModeField back = mfc::read_mode_field_csv(path, 2, grid);
  for (size_t q = 0; q < f.raw().size(); ++q) CHECK(back.raw()[q] == f.raw()[q]);

  SUBCASE("row order does not matter") {
    std::vector<std::string> shuffled(lines.begin() + 1, lines.end());
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    shuffled.insert(shuffled.begin(), lines[0]);
    rewrite(path, shuffled);
    mfc::ModeField again = mfc::read_mode_field_csv(path, 2, grid);
    for (size_t q = 0; q < f.raw().size(); ++q) CHECK(again.raw()[q] == f.raw()[q]);
  }
  SUBCASE("duplicate row is rejected") {
    lines.push_back(lines.back());
    lines.erase(lines.begin() + 1);
    rewrite(path, lines);
    CHECK_THROWS_AS(mfc::read_mode_field_csv(path, 2, grid), mfc::ArtifactIoError);
  }
  SUBCASE("missing row is rejected") {
    lines.pop_back();
    rewrite(path, lines);
    CHECK_THROWS_AS(mfc::read_mode_field_csv(path, 2, grid), mfc::ArtifactIoError);
  }
  SUBCASE("off-grid coordinate is rejected") {
    lines.at(1) = "0,0.123,0,1.0";
    rewrite(path, lines);
    CHECK_THROWS_AS(mfc::read_mode_field_csv(path, 2, grid), mfc::ArtifactIoError);
  }
  SUBCASE("malformed number is rejected") {
    lines.at(3) += "x";
    rewrite(path, lines);
    CHECK_THROWS_AS(mfc::read_mode_field_csv(path, 2, grid), mfc::ArtifactIoError);
  }
  SUBCASE("bad header is rejected") {
    lines.at(0) = "mode,t,s,val";
    rewrite(path, lines);
    CHECK_THROWS_AS(mfc::read_mode_field_csv(path, 2, grid), mfc::ArtifactIoError);
  }
}

TEST_CASE("control csv carries ordered pairs and rejects self switches") {
  TempDir tmp;
  mfc::GridSpec grid = mfc::GridSpec::make(3, 3, 1.0);
  mfc::ControlField alpha(3, grid);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  for (double& v : alpha.raw()) v = unif(rng);

  std::string path = tmp.file("alpha.csv");
  mfc::write_control_csv(path, alpha);
  std::vector<std::string> lines = read_lines(path);
  CHECK(lines.at(0) == "from,to,t,s,value");
  CHECK(lines.size() == 1 + 6 * 4 * 4);  // six ordered pairs

  mfc::ControlField back = mfc::read_control_csv(path, 3, grid);
  for (size_t q = 0; q < alpha.raw().size(); ++q) CHECK(back.raw()[q] == alpha.raw()[q]);

  SUBCASE("self switch row is rejected") {
    lines.at(1) = "1,1,0,0,0.5";
    rewrite(path, lines);
    CHECK_THROWS_AS(mfc::read_control_csv(path, 3, grid), mfc::ArtifactIoError);
  }
  SUBCASE("out-of-range mode index is rejected") {
    lines.at(1) = "0,3,0,0,0.5";
    rewrite(path, lines);
    CHECK_THROWS_AS(mfc::read_control_csv(path, 3, grid), mfc::ArtifactIoError);
  }
}

TEST_CASE("multiplier csv stores one density row per time cell") {
  TempDir tmp;
  mfc::GridSpec grid = mfc::GridSpec::make(4, 2, 2.0);
  mfc::MultiplierPath lam(2, grid);
  lam.density(0, 1) = 0.75;
  lam.density(1, 3) = 1.0 / 7.0;

  std::string path = tmp.file("lambda.csv");
  mfc::write_multiplier_csv(path, lam);
  std::vector<std::string> lines = read_lines(path);
  CHECK(lines.at(0) == "mode,t_start,t_end,density");
  CHECK(lines.size() == 1 + 2 * 4);
  CHECK(lines.at(2) == "0,0.5,1,0.75");

  mfc::MultiplierPath back = mfc::read_multiplier_csv(path, 2, grid);
  CHECK(back.density(0, 1) == 0.75);
  CHECK(back.density(1, 3) == lam.density(1, 3));
  CHECK(back.mass() == doctest::Approx(lam.mass()).epsilon(1e-15));

  SUBCASE("wrong cell boundary is rejected") {
    lines.at(2) = "0,0.5,1.2,0.75";
    rewrite(path, lines);
    CHECK_THROWS_AS(mfc::read_multiplier_csv(path, 2, grid), mfc::ArtifactIoError);
  }
  SUBCASE("missing file is reported") {
    CHECK_THROWS_AS(mfc::read_multiplier_csv(tmp.file("nope.csv"), 2, grid),
                    mfc::ArtifactIoError);
  }
}

TEST_CASE("convergence lines are stable json with a fixed key order") {
  mfc::OuterIterate it;
  it.iter = 3;
  it.dual = -1.25;
  it.primal = 1.2578125;
  it.gap = 0.0078125;
  it.comp_resid = 1e-9;
  it.lambda_mass = 0.5;
  it.step = 0.125;
  CHECK(mfc::convergence_line(it) ==
        R"({"iter":3,"dual":-1.25,"primal":1.2578125,"gap":0.0078125,)"
        R"("comp_resid":1.0000000000000001e-09,"lambda_mass":0.5,"step":0.125})");
}

TEST_CASE("doubles survive the shortest-17-digit format") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> unif(-1e6, 1e6);
  for (int trial = 0; trial < 200; ++trial) {
    double v = unif(rng) * std::pow(10.0, trial % 13 - 6);
    CHECK(std::stod(mfc::format_full(v)) == v);
  }
  CHECK(mfc::format_full(0.0) == "0");
  CHECK(std::stod(mfc::format_full(1.0 / 3.0)) == 1.0 / 3.0);
}
