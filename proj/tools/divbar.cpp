// divbar: boundary, surfaces, simulation and verification for the
// finite-horizon dividend problem.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "divbar/app.hpp"

namespace {

divbar::RunConfig resolve(const std::string& path, const std::string& output,
                          const std::optional<std::uint64_t>& seed) {
  auto c = path.empty() ? divbar::default_config() : divbar::load_config(path);
  if (!output.empty()) c.output_dir = output;
  if (seed) c.mc.seed = *seed;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal dividend barrier toolkit"};
  app.require_subcommand(1);

  std::string config_path, output_dir;
  std::optional<std::uint64_t> seed;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--output", output_dir, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "Monte Carlo seed (overrides mc.seed)");
  };

  auto* boundary = app.add_subcommand("boundary", "solve the integral equation for b(t)");
  auto* pde = app.add_subcommand("pde", "solve the variational inequality for U and V");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimates at the checkpoints");
  auto* verify = app.add_subcommand("verify", "cross-validate all routes, write report.csv");
  auto* defaults = app.add_subcommand("print-defaults", "print the resolved configuration");
  for (auto* sub : {boundary, pde, simulate, verify, defaults}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : divbar::exit_config;
  }

  try {
    const auto cfg = resolve(config_path, output_dir, seed);
    if (defaults->parsed()) {
      std::cout << divbar::to_json(cfg).dump(2) << "\n";
      return divbar::exit_ok;
    }
    if (boundary->parsed()) return divbar::cmd_boundary(cfg, std::cerr);
    if (pde->parsed()) return divbar::cmd_pde(cfg, std::cerr);
    if (simulate->parsed()) return divbar::cmd_simulate(cfg, std::cerr);
    return divbar::cmd_verify(cfg, std::cerr);
  } catch (const divbar::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return divbar::exit_config;
  } catch (const divbar::TrivialCase& e) {
    std::cerr << e.what() << "\n";
    return divbar::exit_config;
  } catch (const divbar::MissingArtifact& e) {
    std::cerr << "missing prerequisite: " << e.what() << "\n";
    return divbar::exit_missing;
  } catch (const divbar::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return divbar::exit_verification;
  }
}
