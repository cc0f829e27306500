#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "divbar/errors.hpp"
#include "divbar/kernels.hpp"
#include "divbar/model.hpp"

namespace divbar {

/// Which kernel sits under the s-integral of the boundary equation.
///
/// creation_weighted: E[e^{lambda L_s} 1{X_s >= b(t+s)}], the form obtained
///   from Dynkin's formula for e^{lambda L - r s} U(t+s, X_s).
/// literal: P(X_s >= b(t+s)) without the local-time weight.
enum class IeForm { creation_weighted, literal };

inline const char* to_string(IeForm f) {
  return f == IeForm::literal ? "literal" : "creation-weighted";
}

struct IeSolverConfig {
  TimeGrid time_grid;
  double root_tol;
  int max_root_iters = 200;
  /// Gauss-Legendre panels per time cell for the s-integral.
  int quad_subdivisions = 2;
  int tail_patch_cells = 0;
  /// Upper end of the root bracket.
  double b_max;
  IeForm form = IeForm::creation_weighted;

  /// Defaults: root_tol = 1e-6 sigma sqrt(T), b_max = max(5 sigma sqrt(T), 10 mu T).
  static IeSolverConfig defaults(const ModelParams& p, TimeGrid grid) {
    const double scale = p.sigma() * std::sqrt(p.horizon());
    IeSolverConfig c{std::move(grid), 1e-6 * scale};
    c.b_max = std::max(5.0 * scale, 10.0 * p.mu() * p.horizon());
    return c;
  }

  void validate() const {
    if (!(root_tol > 0.0)) throw ConfigError("IeSolverConfig: root_tol must be positive");
    if (max_root_iters < 1) throw ConfigError("IeSolverConfig: max_root_iters must be >= 1");
    if (quad_subdivisions < 1) throw ConfigError("IeSolverConfig: quad_subdivisions must be >= 1");
    if (tail_patch_cells < 0 ||
        static_cast<std::size_t>(tail_patch_cells) >= time_grid.count() - 1)
      throw ConfigError("IeSolverConfig: tail_patch_cells must be in [0, count - 1)");
    if (!(b_max > 0.0)) throw ConfigError("IeSolverConfig: b_max must be positive");
  }

 private:
  IeSolverConfig(TimeGrid g, double tol) : time_grid(std::move(g)), root_tol(tol), b_max(0.0) {}
};

/// Leading-order shape sigma sqrt((T - t) ln(1/(T - t))) of b near T.
inline double boundary_asymptote(double t, const ModelParams& p) {
  const double tau = p.horizon() - t;
  if (!(tau > 0.0) || !(tau < 1.0))
    throw DomainError("boundary_asymptote: requires 0 < T - t < 1");
  return p.sigma() * std::sqrt(tau * std::log(1.0 / tau));
}

namespace detail {

inline double interp_linear(std::span<const double> nodes, std::span<const double> values,
                            double t) {
  if (t <= nodes.front()) return values.front();
  if (t >= nodes.back()) return values.back();
  std::size_t k = locate_cell(nodes, t);
  double w = (t - nodes[k]) / (nodes[k + 1] - nodes[k]);
  return values[k] + w * (values[k + 1] - values[k]);
}

/// Kernel under the s-integral, with the start level x = b(t).
inline double ie_kernel(double s, double x, double c, const ModelParams& p, IeForm form) {
  return form == IeForm::literal ? reflected_survival(s, x, c, p)
                                 : weighted_survival(s, x, c, p);
}

/// Residual of the boundary equation at time t for a boundary given by its
/// node values; b(t) is interpolated from the same values.
inline double ie_residual_values(std::span<const double> nodes, std::span<const double> values,
                                 double t, const ModelParams& p, IeForm form, int panels) {
  using GL = boost::math::quadrature::gauss<double, 8>;
  const double horizon = nodes.back();
  const double tau = horizon - t;
  const double bt = interp_linear(nodes, values, t);
  const double r = p.r();

  const double terminal = std::exp(-r * tau) * exp_max_moment(tau, bt, p);

  double integral = 0.0;
  if (r > 0.0) {
    auto integrand = [&](double s) {
      const double level = std::max(0.0, interp_linear(nodes, values, t + s));
      return std::exp(-r * s) * ie_kernel(s, bt, level, p, form);
    };
    // Breakpoints: t, every grid node after t, T.
    std::size_t k = locate_cell(nodes, t);
    if (nodes[k + 1] <= t) ++k;
    double a = t;
    bool first = true;
    for (std::size_t j = k + 1; j < nodes.size(); ++j) {
      const double b = nodes[j];
      if (b <= a) continue;
      const double lo = a - t, hi = b - t, h = hi - lo;
      for (int q = 0; q < panels; ++q) {
        const double q0 = static_cast<double>(q) / panels;
        const double q1 = static_cast<double>(q + 1) / panels;
        if (first) {
          // s = lo + h v^2 removes the sqrt(s) behaviour at s = 0.
          integral += GL::integrate(
              [&](double v) { return integrand(lo + h * v * v) * 2.0 * h * v; }, q0, q1);
        } else {
          integral += GL::integrate(integrand, lo + h * q0, lo + h * q1);
        }
      }
      first = false;
      a = b;
    }
  }
  return terminal + r * integral - 1.0;
}

}  // namespace detail

/// Residual of the boundary equation at t in [0, T):
/// E[e^{lambda (b v S_{T-t} - b) - r (T-t)}] + r int_0^{T-t} e^{-rs} K(s) ds - 1
/// with b = b(t). Positive when b(t) lies inside the continuation region.
inline double ie_residual(const Boundary& b, double t, const ModelParams& p,
                          IeForm form = IeForm::creation_weighted, int quad_subdivisions = 2) {
  if (!(t >= 0.0) || !(t < p.horizon()))
    throw DomainError("ie_residual: requires t in [0, T)");
  if (b.grid().horizon() != p.horizon())
    throw GridMismatch("ie_residual: boundary grid horizon differs from T");
  return detail::ie_residual_values(b.grid().nodes(), b.values(), t, p, form, quad_subdivisions);
}

/// Per-node record of a boundary solve.
struct IeDiagnostics {
  std::vector<double> residuals;   // at each node, 0 at T
  std::vector<int> iterations;     // residual evaluations spent per node
  std::vector<bool> patched;       // node taken from the asymptote
};

/// Backward marching solve of the boundary equation from b(T) = 0.
///
/// At node t_i the boundary on (t_i, T] is known; the scalar b(t_i) is the
/// first sign change of the residual above b(t_{i+1}), located by a
/// geometric scan and refined by bisection to root_tol.
inline Boundary solve_integral_equation(const ModelParams& p, const IeSolverConfig& cfg,
                                        IeDiagnostics* diag = nullptr) {
  p.require_nontrivial("solve_integral_equation");
  cfg.validate();
  const TimeGrid& grid = cfg.time_grid;
  if (grid.horizon() != p.horizon())
    throw GridMismatch("solve_integral_equation: grid must end at T");

  const std::size_t n = grid.count();
  const auto nodes = grid.nodes();
  std::vector<double> b(n, 0.0);
  IeDiagnostics local;
  local.residuals.assign(n, 0.0);
  local.iterations.assign(n, 0);
  local.patched.assign(n, false);

  const std::size_t patch_from = n - 1 - static_cast<std::size_t>(cfg.tail_patch_cells);
  for (std::size_t ii = n - 1; ii-- > 0;) {
    const double lo_level = b[ii + 1];
    if (ii >= patch_from) {
      b[ii] = boundary_asymptote(nodes[ii], p);
      if (b[ii] < lo_level)
        throw NonMonotone("solve_integral_equation: asymptote patch is not monotone at t=" +
                          std::to_string(nodes[ii]));
      local.patched[ii] = true;
      local.residuals[ii] = detail::ie_residual_values(nodes, b, nodes[ii], p, cfg.form,
                                                       cfg.quad_subdivisions);
      continue;
    }

    int evals = 0;
    auto f = [&](double c) {
      ++evals;
      b[ii] = c;
      return detail::ie_residual_values(nodes, b, nodes[ii], p, cfg.form, cfg.quad_subdivisions);
    };

    double lo = lo_level;
    double f_lo = f(lo);
    if (!(f_lo > 0.0))
      throw NoBracket("solve_integral_equation: residual is not positive at b(t_{i+1}) for t=" +
                      std::to_string(nodes[ii]));
    // Geometric scan for the first non-positive residual.
    double step = std::max(10.0 * cfg.root_tol, 1e-4 * cfg.b_max);
    double hi = lo;
    double f_hi = f_lo;
    while (f_hi > 0.0) {
      double next = std::min(lo_level + step, cfg.b_max);
      if (next <= hi)
        throw NoBracket("solve_integral_equation: no sign change below b_max for t=" +
                        std::to_string(nodes[ii]));
      lo = hi;
      f_lo = f_hi;
      hi = next;
      f_hi = f(hi);
      step *= 2.0;
    }
    int iters = 0;
    while (hi - lo > cfg.root_tol && iters < cfg.max_root_iters) {
      const double mid = 0.5 * (lo + hi);
      if (f(mid) > 0.0)
        lo = mid;
      else
        hi = mid;
      ++iters;
    }
    const double root = 0.5 * (lo + hi);
    if (root + 1e-12 < lo_level)
      throw NonMonotone("solve_integral_equation: b increased in time at t=" +
                        std::to_string(nodes[ii]));
    b[ii] = root;
    local.residuals[ii] =
        detail::ie_residual_values(nodes, b, nodes[ii], p, cfg.form, cfg.quad_subdivisions);
    local.iterations[ii] = evals + 1;
  }
  b.back() = 0.0;
  if (diag) *diag = std::move(local);
  return Boundary(grid, std::move(b));
}

/// Ratio b(t) / boundary_asymptote(t) at nodes with 0 < T - t < 1.
inline std::vector<double> asymptote_ratios(const Boundary& b, const ModelParams& p,
                                            std::span<const std::size_t> indices) {
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(b[i] / boundary_asymptote(b.grid()[i], p));
  return out;
}

}  // namespace divbar
