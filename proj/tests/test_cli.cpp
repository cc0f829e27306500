#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "divbar/app.hpp"

using namespace divbar;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("divbar_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(DIVBAR_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* small_config = R"({
  "grids": {"time_steps": 50, "space_steps": 100},
  "mc": {"n_paths": 2000, "dt": 0.01, "workers": 1, "suboptimal_barriers": [0.0, 1.0]}
})";

}  // namespace

TEST(Config, DefaultsResolve) {
  const auto c = default_config();
  EXPECT_EQ(c.time_steps, 400u);
  EXPECT_EQ(c.space_steps, 800u);
  EXPECT_DOUBLE_EQ(c.x_max, 4.0);
  EXPECT_DOUBLE_EQ(c.ie_root_tol, 1e-6);
  EXPECT_DOUBLE_EQ(c.mc.dt, 1e-3);
  EXPECT_EQ(c.checkpoints.size(), 8u);
  EXPECT_EQ(c.ie_form, IeForm::creation_weighted);
}

TEST(Config, RoundTripsThroughJson) {
  const auto c = parse_config(R"({"model": {"mu": 0.3, "T": 2.0}, "mc": {"seed": 9}})");
  const auto again = parse_config(to_json(c).dump());
  EXPECT_EQ(to_json(c).dump(), to_json(again).dump());
  EXPECT_DOUBLE_EQ(again.x_max, 4.0 * std::sqrt(2.0));
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("{ not json"), ConfigError);
  EXPECT_THROW(parse_config(R"({"modle": {}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"model": {"sigma": -1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"model": {"mu": "high"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"checkpoints": [[1.0, 0.5]]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"checkpoints": [[0.0, 9.0]]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"pde": {"scheme": "explicit"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"mc": {"dt": 0.5}})"), ConfigError);
}

TEST(Cli, MalformedConfigExitsTwo) {
  const auto dir = scratch("malformed");
  EXPECT_EQ(run("boundary --config " + write_config(dir, "{\"grids\": ").string()), 2);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST(Cli, TrivialDriftExitsTwoForSolvers) {
  const auto dir = scratch("trivial");
  const auto cfg = write_config(dir, R"({"model": {"mu": -0.1}})");
  EXPECT_EQ(run("boundary --config " + cfg.string() + " --output " + dir.string()), 2);
  EXPECT_EQ(run("pde --config " + cfg.string() + " --output " + dir.string()), 2);
}

TEST(Cli, TrivialDriftVerifyReportsOnlyTrivialCheck) {
  const auto dir = scratch("trivial_verify");
  const auto cfg = write_config(dir, R"({"model": {"mu": 0.0}})");
  EXPECT_EQ(run("verify --config " + cfg.string() + " --output " + dir.string()), 0);
  EXPECT_EQ(slurp(dir / "report.csv"), "check,value,tolerance,pass\ntrivial_v_equals_x,0,0,1\n");
}

TEST(Cli, SimulateWithoutBoundaryExitsThree) {
  const auto dir = scratch("missing");
  EXPECT_EQ(run("simulate --config " + write_config(dir, small_config).string() + " --output " +
                dir.string()),
            3);
}

TEST(Cli, BoundaryThenSimulateIsReproducible) {
  const auto dir = scratch("pipeline");
  const auto cfg = write_config(dir, small_config).string();
  ASSERT_EQ(run("boundary --config " + cfg + " --output " + dir.string()), 0);
  ASSERT_TRUE(fs::exists(dir / "boundary_ie.meta.json"));
  ASSERT_TRUE(fs::exists(dir / "boundary_ie.log"));
  const auto b = io::read_boundary_csv(dir / "boundary_ie.csv");
  EXPECT_EQ(b.values().back(), 0.0);

  ASSERT_EQ(run("simulate --config " + cfg + " --output " + dir.string()), 0);
  const auto first = slurp(dir / "mc_estimates.csv");
  ASSERT_EQ(run("simulate --config " + cfg + " --output " + dir.string()), 0);
  EXPECT_EQ(first, slurp(dir / "mc_estimates.csv"));
  ASSERT_EQ(run("simulate --config " + cfg + " --output " + dir.string() + " --seed 5"), 0);
  EXPECT_NE(first, slurp(dir / "mc_estimates.csv"));

  // c = 0 pays the whole fund at once.
  std::istringstream rows(first);
  std::string line;
  int zero_rows = 0;
  while (std::getline(rows, line)) {
    if (line.rfind("suboptimal_c=0,", 0) != 0) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    EXPECT_EQ(f[3], f[2]);
    EXPECT_EQ(f[4], "0");
    ++zero_rows;
  }
  EXPECT_EQ(zero_rows, 8);
}

TEST(Cli, PdeWritesSurfaces) {
  const auto dir = scratch("pde");
  ASSERT_EQ(run("pde --config " + write_config(dir, small_config).string() + " --output " + dir.string()), 0);
  for (const char* f : {"U.csv", "V.csv", "boundary_pde.csv", "U.meta.json", "V.meta.json", "boundary_pde.meta.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  std::istringstream in(slurp(dir / "U.csv"));
  std::string line, last;
  while (std::getline(in, line)) last = line;
  EXPECT_EQ(last.substr(0, 2), "1,");
  EXPECT_EQ(last.find_first_not_of("1,"), std::string::npos);
}

TEST(Cli, SmallXmaxIsAFailedCheck) {
  const auto dir = scratch("xmax");
  const auto cfg = write_config(dir, R"({"grids": {"time_steps": 50, "space_steps": 100, "x_max": 1.5},
                                       "verify": {"refinement": false}})");
  EXPECT_EQ(run("verify --config " + cfg.string() + " --output " + dir.string()), 1);
  const auto report = slurp(dir / "report.csv");
  EXPECT_NE(report.find("xmax_sufficient"), std::string::npos);
  EXPECT_NE(report.find(",0\n"), std::string::npos);
}

TEST(Cli, PrintDefaultsParses) {
  const auto dir = scratch("defaults");
  const auto out = dir / "defaults.json";
  const std::string cmd = std::string(DIVBAR_CLI) + " print-defaults > " + out.string();
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  const auto c = parse_config(slurp(out));
  EXPECT_EQ(to_json(c).dump(), to_json(default_config()).dump());
}
