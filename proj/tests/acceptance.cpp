// Acceptance run: one pass/fail line per criterion, exit status 1 if any fails.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "divbar/app.hpp"

using namespace divbar;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string title;
  std::function<bool(const std::string&)> owns;
};

bool starts(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void line(int id, bool pass, const std::string& title, const std::string& detail) {
  std::printf("criterion %2d %s  %s (%s)\n", id, pass ? "PASS" : "FAIL", title.c_str(), detail.c_str());
  std::fflush(stdout);
}

}  // namespace

int main() {
  std::ostringstream log;
  const RunConfig cfg = default_config();
  std::cerr << "running the default verification (several minutes)\n";
  const VerificationReport rep = run_verification(cfg, std::cerr);

  const std::vector<Criterion> groups{
      {1, "boundary: integral equation vs PDE, with refinement",
       [](const std::string& n) { return starts(n, "boundary_") || starts(n, "xmax"); }},
      {2, "V_x recovers U", [](const std::string& n) { return starts(n, "connection_"); }},
      {3, "Monte Carlo vs PDE values",
       [](const std::string& n) { return starts(n, "mc_") || starts(n, "ux_representation"); }},
      {4, "smooth fit", [](const std::string& n) { return n == "smooth_fit"; }},
      {5, "creation condition", [](const std::string& n) { return n == "creation_condition"; }},
      {6, "verification residuals", [](const std::string& n) { return starts(n, "verification_"); }},
      {7, "dominance of the optimal barrier", [](const std::string& n) { return starts(n, "dominance_"); }},
      {8, "integral-equation residual", [](const std::string& n) { return starts(n, "ie_"); }},
      {9, "asymptote trend", [](const std::string& n) { return starts(n, "asymptote_"); }},
      {10, "shape invariants", [](const std::string& n) { return starts(n, "shape_"); }},
  };

  bool all = true;
  std::vector<bool> used(rep.checks().size(), false);
  for (const auto& g : groups) {
    bool pass = true;
    int count = 0;
    std::string failing;
    for (std::size_t k = 0; k < rep.checks().size(); ++k) {
      const auto& c = rep.checks()[k];
      if (!g.owns(c.name)) continue;
      used[k] = true;
      ++count;
      if (!c.pass) {
        pass = false;
        failing += " " + c.name + "=" + io::fmt(c.value) + ">" + io::fmt(c.tolerance);
      }
    }
    if (count == 0) pass = false;
    line(g.id, pass, g.title, std::to_string(count) + " checks" + failing);
    all = all && pass;
  }

  // Trivial cases: terminal rows from the default run and the mu <= 0 route.
  {
    bool pass = true;
    std::string detail;
    for (std::size_t k = 0; k < rep.checks().size(); ++k) {
      const auto& c = rep.checks()[k];
      if (!starts(c.name, "terminal_row_")) continue;
      used[k] = true;
      pass = pass && c.pass;
      detail += c.name + "=" + io::fmt(c.value) + " ";
    }
    RunConfig flat = cfg;
    flat.mu = -0.2;
    const auto trivial = run_verification(flat, log);
    pass = pass && trivial.passed() && trivial.checks().size() == 1 &&
           trivial.checks()[0].name == "trivial_v_equals_x";
    const ModelParams p(-0.2, 1.0, 0.05, 1.0);
    pass = pass && trivial_value(p, 0.0, 2.0) == 2.0 && trivial_value(p, 1.0, 7.3) == 7.3;
    line(11, pass, "trivial cases", detail + "mu<=0 report rows=" + std::to_string(trivial.checks().size()));
    all = all && pass;
  }

  for (std::size_t k = 0; k < used.size(); ++k)
    if (!used[k]) {
      std::printf("unassigned check %s\n", rep.checks()[k].name.c_str());
      all = false;
    }

  // Reproducibility: two verify runs on a reduced config.
  {
    RunConfig small = cfg;
    small.time_steps = 100;
    small.space_steps = 200;
    small.mc.n_paths = 5000;
    small.mc.dt = 1e-2;
    const auto base = fs::temp_directory_path() / "divbar_acceptance";
    fs::remove_all(base);
    small.output_dir = (base / "a").string();
    cmd_verify(small, log);
    small.output_dir = (base / "b").string();
    cmd_verify(small, log);
    const auto a = slurp(base / "a" / "report.csv"), b = slurp(base / "b" / "report.csv");
    const bool pass = !a.empty() && a == b;
    line(12, pass, "byte-identical verify reports", std::to_string(a.size()) + " bytes");
    all = all && pass;
  }

  std::printf("overall %s\n", all ? "PASS" : "FAIL");
  return all ? 0 : 1;
}
