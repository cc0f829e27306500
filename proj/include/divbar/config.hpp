#pragma once

// Run configuration: one JSON document drives every subcommand.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "divbar/boundary_solver.hpp"
#include "divbar/errors.hpp"
#include "divbar/mc.hpp"
#include "divbar/model.hpp"
#include "divbar/pde.hpp"
#include "divbar/verification.hpp"

namespace divbar {

struct Checkpoint {
  double t;
  double x;
};

struct VerifySettings {
  bool refinement = true;
  double dominance_x = 0.5;
  std::vector<double> dominance_fractions{0.25, 0.5, 1.0};
  /// Points (t, x) for the U_x representation spot check.
  std::vector<Checkpoint> ux_points{{0.0, 0.0}, {0.0, 0.5}, {0.5, 0.25}};
  /// MC agreement band in standard errors.
  double mc_band = 3.0;
  ResidualTolerances residuals{};
};

/// Fully resolved configuration (every default filled in).
struct RunConfig {
  double mu = 0.5, sigma = 1.0, r = 0.05, horizon = 1.0;
  std::size_t time_steps = 400;
  std::size_t space_steps = 800;
  double x_max = 0.0;

  double ie_root_tol = 0.0;
  int ie_max_root_iters = 200;
  int ie_quad_subdivisions = 2;
  int ie_tail_patch_cells = 0;
  double ie_b_max = 0.0;
  IeForm ie_form = IeForm::creation_weighted;

  PdeScheme pde_scheme = PdeScheme::crank_nicolson_projected;
  bool pde_use_psor = false;
  double pde_psor_tol = 1e-12;
  int pde_psor_max_iters = 20000;
  double pde_boundary_extract_tol = 1e-10;

  McConfig mc{};
  /// Boundary file for `simulate`; empty means <output_dir>/boundary_ie.csv.
  std::string boundary_file;
  bool compute_boundary = false;
  std::vector<double> suboptimal_barriers{0.0};

  std::string output_dir = "out";
  std::vector<Checkpoint> checkpoints;
  VerifySettings verify{};

  ModelParams params() const { return ModelParams(mu, sigma, r, horizon); }
  TimeGrid time_grid() const { return TimeGrid::uniform(horizon, time_steps); }
  SpaceGrid space_grid() const { return SpaceGrid::uniform(x_max, space_steps); }

  IeSolverConfig ie_config() const {
    auto c = IeSolverConfig::defaults(params(), time_grid());
    c.root_tol = ie_root_tol;
    c.max_root_iters = ie_max_root_iters;
    c.quad_subdivisions = ie_quad_subdivisions;
    c.tail_patch_cells = ie_tail_patch_cells;
    c.b_max = ie_b_max;
    c.form = ie_form;
    return c;
  }

  PdeConfig pde_config() const {
    PdeConfig c{time_grid(), space_grid()};
    c.scheme = pde_scheme;
    c.use_psor = pde_use_psor;
    c.psor_tol = pde_psor_tol;
    c.psor_max_iters = pde_psor_max_iters;
    c.boundary_extract_tol = pde_boundary_extract_tol;
    return c;
  }

  /// The same run with time and space steps doubled.
  RunConfig refined() const {
    RunConfig c = *this;
    c.time_steps *= 2;
    c.space_steps *= 2;
    return c;
  }
};

namespace detail {

using json = nlohmann::ordered_json;

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                           const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline std::vector<Checkpoint> read_points(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw ConfigError(where + ": expected an array of [t, x] pairs");
  std::vector<Checkpoint> out;
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw ConfigError(where + ": each entry must be [t, x]");
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

inline json points_json(const std::vector<Checkpoint>& pts) {
  json arr = json::array();
  for (const auto& c : pts) arr.push_back({c.t, c.x});
  return arr;
}

}  // namespace detail

/// Fills data-dependent defaults and checks every nested invariant.
inline void finalize(RunConfig& c, bool explicit_xmax, bool explicit_tol, bool explicit_bmax,
                     bool explicit_dt, bool explicit_checkpoints) {
  if (!(c.sigma > 0.0) || !(c.horizon > 0.0) || !(c.r >= 0.0))
    throw ConfigError("model: requires sigma > 0, T > 0, r >= 0");
  const double scale = c.sigma * std::sqrt(c.horizon);
  if (!explicit_xmax) c.x_max = 4.0 * scale;
  if (!explicit_tol) c.ie_root_tol = 1e-6 * scale;
  if (!explicit_bmax) c.ie_b_max = std::max(5.0 * scale, 10.0 * c.mu * c.horizon);
  if (!explicit_dt) c.mc.dt = 1e-3 * c.horizon;
  if (!explicit_checkpoints) {
    c.checkpoints.clear();
    for (double t : {0.0, 0.5 * c.horizon})
      for (double x : {0.0, 0.25, 0.5, 1.0}) c.checkpoints.push_back({t, x});
  }
  if (c.time_steps < 2 || c.space_steps < 2) throw ConfigError("grids: need at least 2 steps");
  if (!(c.x_max > 0.0)) throw ConfigError("grids.x_max must be positive");
  const auto p = c.params();
  try {
    c.ie_config().validate();
    c.pde_config().validate();
    c.mc.validate(p);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  for (const auto& cp : c.checkpoints) {
    if (!(cp.t >= 0.0) || !(cp.t < c.horizon) || !(cp.x >= 0.0) || !(cp.x <= c.x_max))
      throw ConfigError("checkpoint (" + std::to_string(cp.t) + ", " + std::to_string(cp.x) +
                        ") lies outside [0,T) x [0,x_max]");
  }
  for (const auto& cp : c.verify.ux_points) {
    if (!(cp.t >= 0.0) || !(cp.t < c.horizon) || !(cp.x >= 0.0) || !(cp.x <= c.x_max))
      throw ConfigError("verify.ux_points entry lies outside [0,T) x [0,x_max]");
  }
  for (double b : c.suboptimal_barriers)
    if (!(b >= 0.0)) throw ConfigError("mc.suboptimal_barriers must be >= 0");
}

inline RunConfig parse_config(const std::string& text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  detail::reject_unknown(
      doc, {"model", "grids", "ie", "pde", "mc", "output_dir", "checkpoints", "verify"}, "config");

  RunConfig c;
  bool x_max_set = false, tol_set = false, bmax_set = false, dt_set = false, cps_set = false;
  if (doc.contains("model")) {
    const auto& m = doc["model"];
    detail::reject_unknown(m, {"mu", "sigma", "r", "T"}, "model");
    detail::read(m, "mu", c.mu, "model");
    detail::read(m, "sigma", c.sigma, "model");
    detail::read(m, "r", c.r, "model");
    detail::read(m, "T", c.horizon, "model");
  }
  if (doc.contains("grids")) {
    const auto& g = doc["grids"];
    detail::reject_unknown(g, {"time_steps", "space_steps", "x_max"}, "grids");
    detail::read(g, "time_steps", c.time_steps, "grids");
    detail::read(g, "space_steps", c.space_steps, "grids");
    x_max_set = g.contains("x_max") && !g["x_max"].is_null();
    detail::read(g, "x_max", c.x_max, "grids");
  }
  if (doc.contains("ie")) {
    const auto& e = doc["ie"];
    detail::reject_unknown(e,
                           {"root_tol", "max_root_iters", "quad_subdivisions", "tail_patch_cells",
                            "b_max", "form"},
                           "ie");
    tol_set = e.contains("root_tol") && !e["root_tol"].is_null();
    bmax_set = e.contains("b_max") && !e["b_max"].is_null();
    detail::read(e, "root_tol", c.ie_root_tol, "ie");
    detail::read(e, "max_root_iters", c.ie_max_root_iters, "ie");
    detail::read(e, "quad_subdivisions", c.ie_quad_subdivisions, "ie");
    detail::read(e, "tail_patch_cells", c.ie_tail_patch_cells, "ie");
    detail::read(e, "b_max", c.ie_b_max, "ie");
    std::string form = to_string(c.ie_form);
    detail::read(e, "form", form, "ie");
    if (form == "creation-weighted")
      c.ie_form = IeForm::creation_weighted;
    else if (form == "literal")
      c.ie_form = IeForm::literal;
    else
      throw ConfigError("ie.form must be 'creation-weighted' or 'literal'");
  }
  if (doc.contains("pde")) {
    const auto& p = doc["pde"];
    detail::reject_unknown(
        p, {"scheme", "use_psor", "psor_tol", "psor_max_iters", "boundary_extract_tol"}, "pde");
    std::string scheme = to_string(c.pde_scheme);
    detail::read(p, "scheme", scheme, "pde");
    if (scheme == "implicit-projected")
      c.pde_scheme = PdeScheme::implicit_projected;
    else if (scheme == "crank-nicolson-projected")
      c.pde_scheme = PdeScheme::crank_nicolson_projected;
    else
      throw ConfigError("pde.scheme must be 'implicit-projected' or 'crank-nicolson-projected'");
    detail::read(p, "use_psor", c.pde_use_psor, "pde");
    detail::read(p, "psor_tol", c.pde_psor_tol, "pde");
    detail::read(p, "psor_max_iters", c.pde_psor_max_iters, "pde");
    detail::read(p, "boundary_extract_tol", c.pde_boundary_extract_tol, "pde");
  }
  if (doc.contains("mc")) {
    const auto& m = doc["mc"];
    detail::reject_unknown(m,
                           {"n_paths", "dt", "seed", "bridge_correction", "antithetic", "workers",
                            "boundary_file", "compute_boundary", "suboptimal_barriers"},
                           "mc");
    detail::read(m, "n_paths", c.mc.n_paths, "mc");
    dt_set = m.contains("dt") && !m["dt"].is_null();
    detail::read(m, "dt", c.mc.dt, "mc");
    detail::read(m, "seed", c.mc.seed, "mc");
    detail::read(m, "bridge_correction", c.mc.bridge_correction, "mc");
    detail::read(m, "antithetic", c.mc.antithetic, "mc");
    detail::read(m, "workers", c.mc.workers, "mc");
    detail::read(m, "boundary_file", c.boundary_file, "mc");
    detail::read(m, "compute_boundary", c.compute_boundary, "mc");
    detail::read(m, "suboptimal_barriers", c.suboptimal_barriers, "mc");
  }
  detail::read(doc, "output_dir", c.output_dir, "config");
  if (doc.contains("checkpoints")) {
    c.checkpoints = detail::read_points(doc["checkpoints"], "checkpoints");
    cps_set = true;
  }
  if (doc.contains("verify")) {
    const auto& v = doc["verify"];
    detail::reject_unknown(v,
                           {"refinement", "dominance_x", "dominance_fractions", "ux_points",
                            "mc_band", "generator_constant", "slope_factor", "collar_cells",
                            "tail_fraction"},
                           "verify");
    detail::read(v, "refinement", c.verify.refinement, "verify");
    detail::read(v, "dominance_x", c.verify.dominance_x, "verify");
    detail::read(v, "dominance_fractions", c.verify.dominance_fractions, "verify");
    if (v.contains("ux_points")) c.verify.ux_points = detail::read_points(v["ux_points"], "verify.ux_points");
    detail::read(v, "mc_band", c.verify.mc_band, "verify");
    detail::read(v, "generator_constant", c.verify.residuals.generator_constant, "verify");
    detail::read(v, "slope_factor", c.verify.residuals.slope_factor, "verify");
    detail::read(v, "collar_cells", c.verify.residuals.collar_cells, "verify");
    detail::read(v, "tail_fraction", c.verify.residuals.tail_fraction, "verify");
  }
  finalize(c, x_max_set, tol_set, bmax_set, dt_set, cps_set);
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline RunConfig default_config() { return parse_config("{}"); }

/// Resolved configuration as JSON; parse_config(to_json(c)) reproduces c.
inline nlohmann::ordered_json to_json(const RunConfig& c) {
  using detail::json;
  json j;
  j["model"] = {{"mu", c.mu}, {"sigma", c.sigma}, {"r", c.r}, {"T", c.horizon}};
  j["grids"] = {{"time_steps", c.time_steps}, {"space_steps", c.space_steps}, {"x_max", c.x_max}};
  j["ie"] = {{"root_tol", c.ie_root_tol},
             {"max_root_iters", c.ie_max_root_iters},
             {"quad_subdivisions", c.ie_quad_subdivisions},
             {"tail_patch_cells", c.ie_tail_patch_cells},
             {"b_max", c.ie_b_max},
             {"form", to_string(c.ie_form)}};
  j["pde"] = {{"scheme", to_string(c.pde_scheme)},
              {"use_psor", c.pde_use_psor},
              {"psor_tol", c.pde_psor_tol},
              {"psor_max_iters", c.pde_psor_max_iters},
              {"boundary_extract_tol", c.pde_boundary_extract_tol}};
  j["mc"] = {{"n_paths", c.mc.n_paths},
             {"dt", c.mc.dt},
             {"seed", c.mc.seed},
             {"bridge_correction", c.mc.bridge_correction},
             {"antithetic", c.mc.antithetic},
             {"workers", c.mc.workers},
             {"boundary_file", c.boundary_file},
             {"compute_boundary", c.compute_boundary},
             {"suboptimal_barriers", c.suboptimal_barriers}};
  j["output_dir"] = c.output_dir;
  j["checkpoints"] = detail::points_json(c.checkpoints);
  j["verify"] = {{"refinement", c.verify.refinement},
                 {"dominance_x", c.verify.dominance_x},
                 {"dominance_fractions", c.verify.dominance_fractions},
                 {"ux_points", detail::points_json(c.verify.ux_points)},
                 {"mc_band", c.verify.mc_band},
                 {"generator_constant", c.verify.residuals.generator_constant},
                 {"slope_factor", c.verify.residuals.slope_factor},
                 {"collar_cells", c.verify.residuals.collar_cells},
                 {"tail_fraction", c.verify.residuals.tail_fraction}};
  return j;
}

}  // namespace divbar
