#pragma once

// Subcommands of the divbar tool. Each returns the process exit code.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "divbar/boundary_solver.hpp"
#include "divbar/config.hpp"
#include "divbar/errors.hpp"
#include "divbar/io.hpp"
#include "divbar/mc.hpp"
#include "divbar/pde.hpp"
#include "divbar/verification.hpp"

namespace divbar {

enum ExitCode : int { exit_ok = 0, exit_verification = 1, exit_config = 2, exit_missing = 3 };

namespace detail {

inline std::filesystem::path prepare_output(const RunConfig& c) {
  std::filesystem::path dir(c.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw ConfigError("output_dir '" + c.output_dir + "' cannot be created");
  return dir;
}

inline nlohmann::ordered_json meta_for(const RunConfig& c, const std::string& command,
                                       const std::string& artifact) {
  nlohmann::ordered_json m;
  m["artifact"] = artifact;
  m["command"] = command;
  m["format"] = "csv, 12 significant digits";
  m["config"] = to_json(c);
  return m;
}

inline std::size_t nearest_node(std::span<const double> nodes, double v) {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), v);
  if (it == nodes.end()) return nodes.size() - 1;
  auto k = static_cast<std::size_t>(it - nodes.begin());
  if (k > 0 && v - nodes[k - 1] < nodes[k] - v) --k;
  return k;
}

/// Discrete d/dx of a surface row at node j: central inside, three-point at the ends.
inline double row_derivative(const ValueSurface& s, std::size_t i, std::size_t j) {
  const auto& g = s.space_grid();
  const std::size_t n = g.count();
  if (j == 0) {
    const double h1 = g[1] - g[0], h2 = g[2] - g[1];
    return -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * s.at(i, 0) + (h1 + h2) / (h1 * h2) * s.at(i, 1) -
           h1 / (h2 * (h1 + h2)) * s.at(i, 2);
  }
  if (j == n - 1) return (s.at(i, j) - s.at(i, j - 1)) / (g[j] - g[j - 1]);
  return (s.at(i, j + 1) - s.at(i, j - 1)) / (g[j + 1] - g[j - 1]);
}

inline std::string point_tag(double t, double x) { return "t" + io::fmt(t) + "_x" + io::fmt(x); }

inline double max_gap(const Boundary& a, const Boundary& b, double t_max) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.count(); ++i)
    if (a.grid()[i] <= t_max) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Largest violations of the lattice shape properties of U and V.
struct ShapeViolations {
  double u_ge_1 = 0, u_dec_t = 0, u_dec_x = 0, u_convex = 0;
  double v_concave = 0, vx_ge_1 = 0, v_zero = 0;
};

inline ShapeViolations shape_violations(const ValueSurface& U, const ValueSurface& V) {
  const auto& g = U.space_grid();
  const std::size_t nt = U.rows(), nx = U.cols();
  ShapeViolations s;
  auto up = [](double& slot, double v) { slot = std::max(slot, v); };
  for (std::size_t i = 0; i < nt; ++i) {
    up(s.v_zero, std::abs(V.at(i, 0)));
    for (std::size_t j = 0; j < nx; ++j) {
      up(s.u_ge_1, 1.0 - U.at(i, j));
      if (i + 1 < nt) up(s.u_dec_t, U.at(i + 1, j) - U.at(i, j));
      if (j + 1 < nx) {
        up(s.u_dec_x, U.at(i, j + 1) - U.at(i, j));
        up(s.vx_ge_1, 1.0 - (V.at(i, j + 1) - V.at(i, j)) / (g[j + 1] - g[j]));
      }
      if (j > 0 && j + 1 < nx) {
        const double hl = g[j] - g[j - 1], hr = g[j + 1] - g[j];
        const double du = (U.at(i, j + 1) - U.at(i, j)) / hr - (U.at(i, j) - U.at(i, j - 1)) / hl;
        const double dv = (V.at(i, j + 1) - V.at(i, j)) / hr - (V.at(i, j) - V.at(i, j - 1)) / hl;
        up(s.u_convex, -du);
        up(s.v_concave, dv);
      }
    }
  }
  return s;
}

inline void fail_row(VerificationReport& r, const std::string& name, const std::string& why,
                     std::ostream& log) {
  log << name << ": " << why << "\n";
  r.add({name, std::numeric_limits<double>::quiet_NaN(), 0.0, false});
}

}  // namespace detail

/// Cross-validation of all three solution routes; deterministic for a given config.
inline VerificationReport run_verification(const RunConfig& c, std::ostream& log) {
  VerificationReport rep;
  const auto p = c.params();
  const double T = p.horizon();

  if (!p.nontrivial()) {
    double m = 0.0;
    for (const auto& cp : c.checkpoints) m = std::max(m, std::abs(trivial_value(p, cp.t, cp.x) - cp.x));
    for (double x : c.space_grid().nodes()) m = std::max(m, std::abs(trivial_value(p, T, x) - x));
    rep.add_upper("trivial_v_equals_x", m, 0.0);
    return rep;
  }

  const double dx = c.space_grid().max_step();
  const double t_cut = 0.95 * T;

  // Integral equation.
  log << "solving boundary equation on " << c.time_steps << " steps\n";
  IeDiagnostics diag;
  Boundary b_ie = Boundary::constant(c.time_grid(), 0.0);
  try {
    b_ie = solve_integral_equation(p, c.ie_config(), &diag);
  } catch (const Error& e) {
    detail::fail_row(rep, "ie_solve", e.what(), log);
    return rep;
  }
  double ie_res = 0.0;
  for (std::size_t i = 0; i + 1 < b_ie.count(); ++i) ie_res = std::max(ie_res, std::abs(diag.residuals[i]));
  rep.add_upper("ie_residual_max", ie_res, 1e-5);

  // Asymptote trend at the five latest nodes, the cell touching T excluded.
  const std::size_t n = b_ie.count();
  if (n >= 8) {
    std::vector<std::size_t> idx;
    for (std::size_t k = n - 7; k <= n - 3; ++k) idx.push_back(k);
    const auto ratios = asymptote_ratios(b_ie, p, idx);
    double worst = 0.0;
    for (std::size_t k = 1; k < ratios.size(); ++k)
      worst = std::max(worst, std::abs(ratios[k] - 1.0) - std::abs(ratios[k - 1] - 1.0));
    rep.add_upper("asymptote_trend_monotone", worst, 0.0);
    rep.add_upper("asymptote_latest_ratio_minus_1", std::abs(ratios.back() - 1.0), 0.5);
  } else {
    detail::fail_row(rep, "asymptote_trend_monotone", "time grid too coarse", log);
  }

  rep.add_upper("xmax_sufficient", 2.0 * b_ie[0] - c.x_max, 0.0);
  if (c.x_max < 2.0 * b_ie[0]) {
    log << "x_max=" << c.x_max << " is below 2 b(0)=" << 2.0 * b_ie[0] << "\n";
    return rep;
  }

  // Variational inequality.
  log << "solving variational inequality on " << c.time_steps << "x" << c.space_steps << "\n";
  auto solve_pde = [&](const RunConfig& cc) {
    auto U = solve_U(p, cc.pde_config());
    auto b = extract_boundary(U, cc.pde_boundary_extract_tol);
    return std::make_pair(std::move(U), std::move(b));
  };
  std::optional<std::pair<ValueSurface, Boundary>> pde;
  try {
    pde.emplace(solve_pde(c));
  } catch (const XmaxTooSmall& e) {
    detail::fail_row(rep, "xmax_pde", e.what(), log);
    return rep;
  } catch (const Error& e) {
    detail::fail_row(rep, "pde_solve", e.what(), log);
    return rep;
  }
  const ValueSurface& U = pde->first;
  const Boundary& b_pde = pde->second;
  const ValueSurface V = integrate_V(U);

  const double gap = detail::max_gap(b_ie, b_pde, t_cut);
  rep.add_upper("boundary_ie_vs_pde_gap", gap, 2.0 * dx);

  const auto vr = compute_verification_residuals(V, b_pde, p, c.verify.residuals);
  rep.append(verification_residuals(V, b_pde, p, c.verify.residuals));

  if (c.verify.refinement) {
    const RunConfig f = c.refined();
    log << "refinement: boundary equation on " << f.time_steps << " steps\n";
    try {
      const Boundary b_ie2 = solve_integral_equation(p, f.ie_config());
      log << "refinement: variational inequality on " << f.time_steps << "x" << f.space_steps << "\n";
      const auto [U2, b_pde2] = solve_pde(f);
      const double gap2 = detail::max_gap(b_ie2, b_pde2, t_cut);
      rep.add_upper("boundary_gap_refinement_ratio", gap > 0.0 ? gap2 / gap : 0.0, 0.5);
      const auto vr2 = compute_verification_residuals(integrate_V(U2), b_pde2, p, c.verify.residuals);
      rep.add_upper("verification_iv_refinement_ratio",
                    vr.continuation > 0.0 ? vr2.continuation / vr.continuation : 0.0, 0.6);
    } catch (const Error& e) {
      detail::fail_row(rep, "refinement", e.what(), log);
    }
  }

  // Connection between V and U at the checkpoints.
  const auto& tg = U.time_grid();
  const auto& sg = U.space_grid();
  double conn = 0.0;
  for (const auto& cp : c.checkpoints) {
    const auto i = detail::nearest_node(tg.nodes(), cp.t), j = detail::nearest_node(sg.nodes(), cp.x);
    conn = std::max(conn, std::abs(detail::row_derivative(V, i, j) - U.at(i, j)));
  }
  rep.add_upper("connection_vx_minus_u", conn, 5.0 * dx);

  rep.add_upper("smooth_fit", smooth_fit_residual(U, b_pde).max_abs_until(0.9 * T), 10.0 * dx);
  rep.add_upper("creation_condition", creation_residual(U, p).max_abs_until(t_cut), 10.0 * dx);

  const auto sv = detail::shape_violations(U, V);
  const double shape_tol = 1e-8;
  rep.add_upper("shape_u_ge_1", sv.u_ge_1, shape_tol);
  rep.add_upper("shape_u_nonincreasing_t", sv.u_dec_t, shape_tol);
  rep.add_upper("shape_u_nonincreasing_x", sv.u_dec_x, shape_tol);
  rep.add_upper("shape_u_convex_x", sv.u_convex, shape_tol);
  rep.add_upper("shape_v_concave_x", sv.v_concave, shape_tol);
  rep.add_upper("shape_vx_ge_1", sv.vx_ge_1, shape_tol);
  rep.add_upper("shape_v_at_zero", sv.v_zero, shape_tol);
  // Both curves passed the Boundary invariants (b > 0 before T, non-increasing, b(T) = 0).
  rep.add_upper("shape_boundary", std::max(b_ie.values().back(), b_pde.values().back()), shape_tol);

  double u_term = 0.0, v_term = 0.0;
  for (std::size_t j = 0; j < U.cols(); ++j) {
    u_term = std::max(u_term, std::abs(U.at(U.rows() - 1, j) - 1.0));
    v_term = std::max(v_term, std::abs(V.at(V.rows() - 1, j) - sg[j]));
  }
  rep.add_upper("terminal_row_u_one", u_term, 0.0);
  rep.add_upper("terminal_row_v_x", v_term, 0.0);

  // Monte Carlo against the surfaces, driven by the integral-equation boundary.
  const double band = c.verify.mc_band;
  for (const auto& cp : c.checkpoints) {
    log << "monte carlo at (" << cp.t << ", " << cp.x << ")\n";
    const auto d = simulate_dividend_value(p, b_ie, cp.t, cp.x, c.mc);
    rep.add_upper("mc_dividend_" + detail::point_tag(cp.t, cp.x), std::abs(d.mean - V(cp.t, cp.x)),
                  band * d.std_error);
    const auto s = simulate_stopping_value(p, b_ie, cp.t, cp.x, c.mc);
    rep.add_upper("mc_stopping_" + detail::point_tag(cp.t, cp.x), std::abs(s.mean - U(cp.t, cp.x)),
                  band * s.std_error);
  }
  for (const auto& cp : c.verify.ux_points) {
    log << "U_x representation at (" << cp.t << ", " << cp.x << ")\n";
    const auto e = ux_representation_estimate(p, b_ie, cp.t, cp.x, c.mc);
    const auto i = detail::nearest_node(tg.nodes(), cp.t), j = detail::nearest_node(sg.nodes(), cp.x);
    rep.add_upper("ux_representation_" + detail::point_tag(cp.t, cp.x),
                  std::abs(e.mean - detail::row_derivative(U, i, j)), band * e.std_error);
  }

  const double x0 = c.verify.dominance_x;
  const double v0 = V(0.0, x0);
  double best_gap = -std::numeric_limits<double>::infinity();
  for (double frac : c.verify.dominance_fractions) {
    const double level = frac * b_ie[0];
    log << "constant barrier " << level << "\n";
    const auto e = simulate_suboptimal(p, level, 0.0, x0, c.mc);
    rep.add_upper("dominance_c" + io::fmt(frac), e.mean - v0, band * e.std_error);
    best_gap = std::max(best_gap, (v0 - e.mean) - band * e.std_error);
  }
  if (!c.verify.dominance_fractions.empty())
    rep.add({"dominance_strict", best_gap, 0.0, best_gap > 0.0});
  return rep;
}

inline int cmd_boundary(const RunConfig& c, std::ostream& log) {
  const auto p = c.params();
  p.require_nontrivial("boundary");
  const auto dir = detail::prepare_output(c);
  IeDiagnostics diag;
  const Boundary b = solve_integral_equation(p, c.ie_config(), &diag);
  std::string text = "t,b,residual,evaluations,patched\n";
  for (std::size_t i = 0; i < b.count(); ++i)
    text += io::fmt(b.grid()[i]) + "," + io::fmt(b[i]) + "," + io::fmt(diag.residuals[i]) + "," +
            std::to_string(diag.iterations[i]) + "," + (diag.patched[i] ? "1" : "0") + "\n";
  auto meta = detail::meta_for(c, "boundary", "boundary_ie.csv");
  meta["log"] = "boundary_ie.log";
  io::write_with_sidecar(dir, "boundary_ie.csv", io::boundary_csv(b), meta);
  io::write_text(dir / "boundary_ie.log", text);
  log << "b(0) = " << io::fmt(b[0]) << ", wrote " << (dir / "boundary_ie.csv").string() << "\n";
  return exit_ok;
}

inline int cmd_pde(const RunConfig& c, std::ostream& log) {
  const auto p = c.params();
  p.require_nontrivial("pde");
  const auto dir = detail::prepare_output(c);
  const auto U = solve_U(p, c.pde_config());
  const auto b = extract_boundary(U, c.pde_boundary_extract_tol);
  const auto V = integrate_V(U);
  io::write_with_sidecar(dir, "U.csv", io::surface_csv(U), detail::meta_for(c, "pde", "U.csv"));
  io::write_with_sidecar(dir, "V.csv", io::surface_csv(V), detail::meta_for(c, "pde", "V.csv"));
  io::write_with_sidecar(dir, "boundary_pde.csv", io::boundary_csv(b),
                         detail::meta_for(c, "pde", "boundary_pde.csv"));
  log << "U(0,0) = " << io::fmt(U.at(0, 0)) << ", b(0) = " << io::fmt(b[0]) << "\n";
  return exit_ok;
}

/// Boundary used by `simulate`: solved inline or read from disk.
inline Boundary simulation_boundary(const RunConfig& c) {
  const auto p = c.params();
  if (c.compute_boundary) return solve_integral_equation(p, c.ie_config());
  const std::filesystem::path path = c.boundary_file.empty()
                                         ? std::filesystem::path(c.output_dir) / "boundary_ie.csv"
                                         : std::filesystem::path(c.boundary_file);
  if (!std::filesystem::exists(path))
    throw MissingArtifact("boundary file " + path.string() +
                          " not found; run `boundary` first or set mc.compute_boundary");
  Boundary b = io::read_boundary_csv(path);
  if (b.grid().horizon() != p.horizon())
    throw ConfigError("boundary file " + path.string() + " does not end at T");
  return b;
}

inline int cmd_simulate(const RunConfig& c, std::ostream& log) {
  const auto p = c.params();
  const auto dir = detail::prepare_output(c);
  std::vector<io::EstimateRow> rows;
  if (!p.nontrivial()) {
    // V = x; no randomness is involved.
    for (const auto& cp : c.checkpoints) {
      McEstimate e{cp.x, 0.0, cp.x, cp.x, c.mc.n_paths, c.mc.seed};
      rows.push_back({"trivial", cp.t, cp.x, e, c.mc.dt});
    }
  } else {
    const Boundary b = simulation_boundary(c);
    for (const auto& cp : c.checkpoints) {
      log << "checkpoint (" << cp.t << ", " << cp.x << ")\n";
      rows.push_back({"dividend", cp.t, cp.x, simulate_dividend_value(p, b, cp.t, cp.x, c.mc), c.mc.dt});
      rows.push_back({"stopping", cp.t, cp.x, simulate_stopping_value(p, b, cp.t, cp.x, c.mc), c.mc.dt});
      for (double level : c.suboptimal_barriers)
        rows.push_back({"suboptimal_c=" + io::fmt(level), cp.t, cp.x,
                        simulate_suboptimal(p, level, cp.t, cp.x, c.mc), c.mc.dt});
    }
  }
  io::write_with_sidecar(dir, "mc_estimates.csv", io::estimates_csv(rows),
                         detail::meta_for(c, "simulate", "mc_estimates.csv"));
  return exit_ok;
}

inline int cmd_verify(const RunConfig& c, std::ostream& log) {
  const auto dir = detail::prepare_output(c);
  const auto rep = run_verification(c, log);
  io::write_with_sidecar(dir, "report.csv", io::report_csv(rep),
                         detail::meta_for(c, "verify", "report.csv"));
  if (rep.passed()) return exit_ok;
  for (const auto& chk : rep.checks())
    if (!chk.pass)
      log << "FAILED " << chk.name << ": value " << io::fmt(chk.value) << ", tolerance "
          << io::fmt(chk.tolerance) << "\n";
  return exit_verification;
}

}  // namespace divbar
