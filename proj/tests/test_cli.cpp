#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("mfswitch_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string sub(const char* name) const { return (path / name).string(); }
};

int run(const std::string& args) {
  std::string cmd = std::string(MFSWITCH_BIN) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<const char*> kArtifacts = {"m.csv",        "phi.csv",
                                             "alpha.csv",    "lambda.csv",
                                             "report.json",  "convergence.jsonl"};

}  // namespace

TEST_CASE("solve writes a verifiable artifact directory") {
  TempDir tmp;
  std::string out = tmp.sub("run");
  REQUIRE(run("solve --preset smart_charging --nt 16 --ns 16 --out " + out) == 0);
  for (const char* name : kArtifacts) {
    CAPTURE(name);
    CHECK(fs::exists(fs::path(out) / name));
  }

  nlohmann::json report = nlohmann::json::parse(slurp(fs::path(out) / "report.json"));
  CHECK(report.at("converged") == true);
  CHECK(report.at("grid").at("nt") == 16);
  CHECK(report.at("grid").at("ns") == 16);
  CHECK(report.at("scenario").at("modes").size() == 2);
  CHECK(report.at("gap").get<double>() < 1e-2 * (1.0 + report.at("primal_cost").get<double>()));
  for (const char* key : {"hjb", "fp", "control", "feasibility", "complementarity"}) {
    CAPTURE(key);
    CHECK(report.at("residuals").at(key).get<double>() <=
          report.at("thresholds").at(key).get<double>());
  }

  // Every convergence line is one standalone json object.
  std::istringstream log(slurp(fs::path(out) / "convergence.jsonl"));
  int lines = 0;
  for (std::string line; std::getline(log, line); ++lines) {
    nlohmann::json entry = nlohmann::json::parse(line);
    CHECK(entry.at("iter") == lines + 1);
  }
  CHECK(lines == report.at("iterations").at("outer").get<int>());

  SUBCASE("check accepts the untouched directory") {
    CHECK(run("check " + out) == 0);
  }
  SUBCASE("check flags a corrupted value table") {
    fs::path phi = fs::path(out) / "phi.csv";
    std::vector<std::string> all;
    {
      std::istringstream in(slurp(phi));
      for (std::string l; std::getline(in, l);) all.push_back(l);
    }
    size_t mid = all.size() / 2;
    size_t comma = all[mid].rfind(',');
    all[mid] = all[mid].substr(0, comma) + ",1000";
    std::ofstream rewritten(phi, std::ios::trunc);
    for (const std::string& l : all) rewritten << l << "\n";
    rewritten.close();
    CHECK(run("check " + out) == 2);
  }
  SUBCASE("check reports unreadable artifacts as io errors") {
    fs::remove(fs::path(out) / "m.csv");
    CHECK(run("check " + out) == 3);
  }
}

TEST_CASE("check on an empty directory is an io error") {
  TempDir tmp;
  CHECK(run("check " + tmp.sub("nothing_here")) == 3);
}

TEST_CASE("scenario problems map to distinct exit codes") {
  TempDir tmp;
  SUBCASE("missing scenario file") {
    CHECK(run("solve --scenario " + tmp.sub("absent.json") + " --out " + tmp.sub("o")) == 3);
  }
  SUBCASE("schema violation") {
    std::string bad = tmp.sub("bad.json");
    std::ofstream(bad) << R"({"horizon": 1.0, "modes": ["a"]})";  // missing fields
    CHECK(run("solve --scenario " + bad + " --out " + tmp.sub("o")) == 1);
  }
  SUBCASE("assumption violation") {
    std::string bad = tmp.sub("neg.json");
    std::ofstream(bad) << R"({
      "horizon": 1.0, "modes": ["a"],
      "velocity": [{"expr": "0"}],
      "running_cost": [{"expr": "0"}],
      "terminal_cost": [{"expr": "s"}],
      "initial_density": [{"expr": "2*s"}],
      "capacity": [{"expr": "0.2"}]})";  // capacity below total mass
    CHECK(run("solve --scenario " + bad + " --out " + tmp.sub("o")) == 1);
  }
  SUBCASE("unknown preset") {
    CHECK(run("solve --preset no_such_preset --out " + tmp.sub("o")) == 1);
  }
}

TEST_CASE("identical solves are byte identical") {
  TempDir tmp;
  std::string a = tmp.sub("a"), b = tmp.sub("b");
  REQUIRE(run("solve --preset symmetric_two_mode --nt 12 --ns 12 --out " + a) == 0);
  REQUIRE(run("solve --preset symmetric_two_mode --nt 12 --ns 12 --out " + b) == 0);
  for (const char* name : kArtifacts) {
    CAPTURE(name);
    CHECK(slurp(fs::path(a) / name) == slurp(fs::path(b) / name));
  }
}

TEST_CASE("oracle subcommand agrees with the solver on a preset") {
  TempDir tmp;
  CHECK(run("oracle --preset single_mode --nt 8 --ns 8 --out " + tmp.sub("o")) == 0);
}
