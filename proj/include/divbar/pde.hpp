#pragma once

// Finite-difference solve of the stopping problem for U on [0,T] x [0,x_max]:
//   L U = 0 in the continuation region, U >= 1, U(T, .) = 1,
//   U_x(t,0) + lambda U(t,0) = 0, U(t, x_max) = 1,
// with L = d/dt + sigma^2/2 d2/dx2 + mu d/dx - r.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "divbar/errors.hpp"
#include "divbar/model.hpp"

namespace divbar {

enum class SurfaceKind { U, V };

/// U or V sampled on a time x space grid, row-major in time.
class ValueSurface {
 public:
  ValueSurface(TimeGrid tg, SpaceGrid sg, std::vector<double> values, SurfaceKind kind)
      : tg_(std::move(tg)), sg_(std::move(sg)), values_(std::move(values)), kind_(kind) {
    if (values_.size() != tg_.count() * sg_.count())
      throw GridMismatch("ValueSurface: value count does not match grids");
  }

  const TimeGrid& time_grid() const { return tg_; }
  const SpaceGrid& space_grid() const { return sg_; }
  SurfaceKind kind() const { return kind_; }
  std::size_t rows() const { return tg_.count(); }
  std::size_t cols() const { return sg_.count(); }

  double at(std::size_t i, std::size_t j) const { return values_[i * sg_.count() + j]; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * sg_.count(), sg_.count()};
  }
  std::span<const double> values() const { return values_; }

  /// Bilinear interpolation at (t, x) inside the grid.
  double operator()(double t, double x) const {
    if (t < 0.0 || t > tg_.horizon() || x < 0.0 || x > sg_.x_max())
      throw DomainError("ValueSurface: point outside the grid");
    std::size_t i = tg_.cell_of(t);
    std::size_t j = sg_.cell_of(x);
    double wt = (t - tg_[i]) / (tg_[i + 1] - tg_[i]);
    double wx = (x - sg_[j]) / (sg_[j + 1] - sg_[j]);
    double a = at(i, j) + wx * (at(i, j + 1) - at(i, j));
    double b = at(i + 1, j) + wx * (at(i + 1, j + 1) - at(i + 1, j));
    return a + wt * (b - a);
  }

 private:
  TimeGrid tg_;
  SpaceGrid sg_;
  std::vector<double> values_;
  SurfaceKind kind_;
};

enum class PdeScheme { implicit_projected, crank_nicolson_projected };

inline const char* to_string(PdeScheme s) {
  return s == PdeScheme::implicit_projected ? "implicit-projected" : "crank-nicolson-projected";
}

struct PdeConfig {
  TimeGrid time_grid;
  SpaceGrid space_grid;
  PdeScheme scheme = PdeScheme::crank_nicolson_projected;
  /// PSOR refinement of each projected solve; off means Brennan-Schwartz only.
  bool use_psor = false;
  double psor_tol = 1e-12;
  int psor_max_iters = 20000;
  double psor_omega = 1.5;
  /// U > 1 + boundary_extract_tol marks a continuation node.
  double boundary_extract_tol = 1e-10;
  /// Implicit half steps replacing the first Crank-Nicolson steps.
  int rannacher_steps = 2;

  void validate() const {
    if (!(psor_tol > 0.0) || !(boundary_extract_tol > 0.0))
      throw ConfigError("PdeConfig: tolerances must be positive");
    if (psor_max_iters < 1) throw ConfigError("PdeConfig: psor_max_iters must be >= 1");
    if (!(psor_omega > 0.0 && psor_omega < 2.0))
      throw ConfigError("PdeConfig: psor_omega must lie in (0, 2)");
    if (rannacher_steps < 0) throw ConfigError("PdeConfig: rannacher_steps must be >= 0");
  }
};

namespace detail {

/// Tridiagonal operator: (A u)_i = lo[i] u[i-1] + di[i] u[i] + up[i] u[i+1].
struct Tridiag {
  std::vector<double> lo, di, up;
  explicit Tridiag(std::size_t n) : lo(n, 0.0), di(n, 0.0), up(n, 0.0) {}
  std::size_t size() const { return di.size(); }

  void apply(std::span<const double> u, std::span<double> out) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
      double v = di[i] * u[i];
      if (i > 0) v += lo[i] * u[i - 1];
      if (i + 1 < n) v += up[i] * u[i + 1];
      out[i] = v;
    }
  }
};

/// Spatial part of L (sigma^2/2 u_xx + mu u_x - r u) on a possibly non-uniform
/// grid. Row 0 carries the Robin condition through a ghost node
/// u_{-1} = u_1 + 2 h lambda u_0; the last row is left empty (Dirichlet).
inline Tridiag spatial_operator(const SpaceGrid& sg, const ModelParams& p) {
  const std::size_t n = sg.count();
  const double s2 = 0.5 * p.sigma() * p.sigma();
  const double mu = p.mu(), r = p.r(), lam = p.lambda();
  Tridiag op(n);
  {
    const double h = sg[1] - sg[0];
    // s2 (2 u1 - 2 u0 + 2 h lam u0)/h^2 + mu (-2 h lam u0)/(2h) - r u0
    op.di[0] = -2.0 * s2 / (h * h) + 2.0 * s2 * lam / h - mu * lam - r;
    op.up[0] = 2.0 * s2 / (h * h);
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hm = sg[i] - sg[i - 1];
    const double hp = sg[i + 1] - sg[i];
    const double sum = hm + hp;
    const double dxx_m = 2.0 / (hm * sum), dxx_p = 2.0 / (hp * sum), dxx_0 = -2.0 / (hm * hp);
    const double dx_m = -hp / (hm * sum), dx_p = hm / (hp * sum), dx_0 = (hp - hm) / (hm * hp);
    op.lo[i] = s2 * dxx_m + mu * dx_m;
    op.di[i] = s2 * dxx_0 + mu * dx_0 - r;
    op.up[i] = s2 * dxx_p + mu * dx_p;
  }
  return op;
}

/// Solves A u = rhs subject to u >= 1 when the stopping set lies to the
/// right of the continuation set: LU sweep from x=0 upwards, projected back
/// substitution from x_max downwards.
inline void brennan_schwartz(const Tridiag& a, std::span<const double> rhs, std::span<double> u) {
  const std::size_t n = a.size();
  std::vector<double> d(a.di), r(rhs.begin(), rhs.end());
  for (std::size_t i = 1; i < n; ++i) {
    const double m = a.lo[i] / d[i - 1];
    d[i] -= m * a.up[i - 1];
    r[i] -= m * r[i - 1];
  }
  u[n - 1] = std::max(1.0, r[n - 1] / d[n - 1]);
  for (std::size_t i = n - 1; i-- > 0;) u[i] = std::max(1.0, (r[i] - a.up[i] * u[i + 1]) / d[i]);
}

/// Projected SOR refinement starting from the current u. Returns sweeps used.
inline int psor(const Tridiag& a, std::span<const double> rhs, std::span<double> u, double omega,
                double tol, int max_iters) {
  const std::size_t n = a.size();
  for (int it = 1; it <= max_iters; ++it) {
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double res = rhs[i] - a.di[i] * u[i];
      if (i > 0) res -= a.lo[i] * u[i - 1];
      if (i + 1 < n) res -= a.up[i] * u[i + 1];
      const double next = std::max(1.0, u[i] + omega * res / a.di[i]);
      change = std::max(change, std::abs(next - u[i]));
      u[i] = next;
    }
    if (change < tol) return it;
  }
  throw PsorDiverged("psor: iteration cap reached");
}

}  // namespace detail

/// Discrete L U at interior node (i, j), 0 <= i < rows-1, 0 < j < cols-1,
/// with the time derivative taken forward in time (backward-solver direction).
inline double discrete_generator(const ValueSurface& s, std::size_t i, std::size_t j,
                                 const ModelParams& p) {
  const auto& tg = s.time_grid();
  const auto& sg = s.space_grid();
  const double dt = tg[i + 1] - tg[i];
  const double hm = sg[j] - sg[j - 1], hp = sg[j + 1] - sg[j], sum = hm + hp;
  auto spatial = [&](std::size_t row) {
    const double um = s.at(row, j - 1), u0 = s.at(row, j), up = s.at(row, j + 1);
    const double uxx = 2.0 * (up / (hp * sum) + um / (hm * sum) - u0 / (hm * hp));
    const double ux = (hm * hm * up - hp * hp * um + (hp * hp - hm * hm) * u0) / (hm * hp * sum);
    return 0.5 * p.sigma() * p.sigma() * uxx + p.mu() * ux - p.r() * u0;
  };
  const double ut = (s.at(i + 1, j) - s.at(i, j)) / dt;
  return ut + 0.5 * (spatial(i) + spatial(i + 1));
}

/// Backward solve of the variational inequality for U.
inline ValueSurface solve_U(const ModelParams& p, const PdeConfig& cfg) {
  p.require_nontrivial("solve_U");
  cfg.validate();
  const TimeGrid& tg = cfg.time_grid;
  const SpaceGrid& sg = cfg.space_grid;
  if (tg.horizon() != p.horizon()) throw GridMismatch("solve_U: time grid must end at T");

  const std::size_t nt = tg.count(), nx = sg.count();
  std::vector<double> values(nt * nx, 1.0);
  const detail::Tridiag op = detail::spatial_operator(sg, p);

  std::vector<double> u(nx, 1.0), rhs(nx), lu(nx);
  detail::Tridiag sys(nx);

  // One theta step of size h from u (later time) to u (earlier time).
  auto step = [&](double h, double theta) {
    op.apply(u, lu);
    for (std::size_t k = 0; k < nx; ++k) rhs[k] = u[k] + (1.0 - theta) * h * lu[k];
    for (std::size_t k = 0; k < nx; ++k) {
      sys.lo[k] = -theta * h * op.lo[k];
      sys.di[k] = 1.0 - theta * h * op.di[k];
      sys.up[k] = -theta * h * op.up[k];
    }
    // x_max: U = 1
    sys.lo[nx - 1] = 0.0;
    sys.di[nx - 1] = 1.0;
    rhs[nx - 1] = 1.0;
    detail::brennan_schwartz(sys, rhs, u);
    if (cfg.use_psor)
      detail::psor(sys, rhs, u, cfg.psor_omega, cfg.psor_tol, cfg.psor_max_iters);
  };

  const double theta = cfg.scheme == PdeScheme::implicit_projected ? 1.0 : 0.5;
  for (std::size_t n = nt - 1; n-- > 0;) {
    const double h = tg[n + 1] - tg[n];
    const std::size_t taken = nt - 2 - n;
    if (theta < 1.0 && taken < static_cast<std::size_t>(cfg.rannacher_steps)) {
      step(0.5 * h, 1.0);
      step(0.5 * h, 1.0);
    } else {
      step(h, theta);
    }
    std::copy(u.begin(), u.end(), values.begin() + static_cast<std::ptrdiff_t>(n * nx));
    if (u[nx - 2] > 1.0 + cfg.boundary_extract_tol)
      throw XmaxTooSmall("solve_U: continuation region reaches x_max at t=" +
                         std::to_string(tg[n]));
  }
  return ValueSurface(tg, sg, std::move(values), SurfaceKind::U);
}

/// Free boundary of a U surface: per time row, the level where U - 1 vanishes.
///
/// Near the boundary U - 1 ~ C (b - x)^2 (smooth fit), so sqrt(U - 1) is
/// linear in x; the zero of the line through the last two continuation nodes
/// gives b, clamped to within two cells of the last continuation node.
/// Monotonicity violations of at most one space cell are removed by
/// isotonic (pool-adjacent-violators) projection.
inline Boundary extract_boundary(const ValueSurface& U, double tol = 1e-10) {
  if (U.kind() != SurfaceKind::U) throw DomainError("extract_boundary: surface must be U");
  const auto& tg = U.time_grid();
  const auto& sg = U.space_grid();
  const std::size_t nt = U.rows(), nx = U.cols();
  std::vector<double> b(nt, 0.0);
  for (std::size_t i = 0; i < nt; ++i) {
    auto row = U.row(i);
    std::size_t k = nx;
    for (std::size_t j = nx; j-- > 0;) {
      if (row[j] > 1.0 + tol) {
        k = j;
        break;
      }
    }
    if (k == nx) continue;
    const double h = sg[k + 1] - sg[k];
    double w;
    if (k == 0) {
      // Only x = 0 continues: linear interpolation of U - 1 - tol.
      const double e0 = row[0] - 1.0 - tol, e1 = row[1] - 1.0 - tol;
      w = e0 / (e0 - e1);
    } else {
      const double s1 = std::sqrt(row[k] - 1.0), s0 = std::sqrt(row[k - 1] - 1.0);
      const double hm = sg[k] - sg[k - 1];
      w = s0 > s1 ? (s1 / (s0 - s1)) * (hm / h) : 0.0;
    }
    b[i] = sg[k] + h * std::clamp(w, 0.0, 2.0);
  }
  if (tg.horizon() > 0.0) b.back() = 0.0;

  // Pool-adjacent-violators for a non-increasing fit on [0, T).
  const double cell = sg.max_step();
  struct Block {
    double sum;
    std::size_t len;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i + 1 < nt; ++i) {
    blocks.push_back({b[i], 1});
    while (blocks.size() > 1) {
      auto& last = blocks.back();
      auto& prev = blocks[blocks.size() - 2];
      if (prev.sum / prev.len >= last.sum / last.len) break;
      prev.sum += last.sum;
      prev.len += last.len;
      blocks.pop_back();
    }
  }
  std::size_t i = 0;
  for (const auto& blk : blocks) {
    const double mean = blk.sum / static_cast<double>(blk.len);
    for (std::size_t k = 0; k < blk.len; ++k, ++i) {
      if (std::abs(b[i] - mean) > cell)
        throw NonMonotoneBeyondCell("extract_boundary: violation beyond one cell at t=" +
                                    std::to_string(tg[i]));
      b[i] = mean;
    }
  }
  return Boundary(tg, std::move(b));
}

/// V(t, x) = int_0^x U(t, y) dy by the composite trapezoid rule.
inline ValueSurface integrate_V(const ValueSurface& U) {
  if (U.kind() != SurfaceKind::U) throw DomainError("integrate_V: surface must be U");
  const auto& sg = U.space_grid();
  const std::size_t nt = U.rows(), nx = U.cols();
  std::vector<double> v(nt * nx);
  for (std::size_t i = 0; i < nt; ++i) {
    auto row = U.row(i);
    // Integrate U - 1 and add x so rows with U == 1 give V == x exactly.
    double excess = 0.0;
    v[i * nx] = 0.0;
    for (std::size_t j = 1; j < nx; ++j) {
      excess += 0.5 * ((row[j - 1] - 1.0) + (row[j] - 1.0)) * (sg[j] - sg[j - 1]);
      v[i * nx + j] = sg[j] + excess;
    }
  }
  return ValueSurface(U.time_grid(), sg, std::move(v), SurfaceKind::V);
}

/// Per-time values over nodes with t < T.
struct TimeSeries {
  std::vector<double> t;
  std::vector<double> value;

  /// Max |value| over t <= t_max.
  double max_abs_until(double t_max) const {
    double m = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i] <= t_max) m = std::max(m, std::abs(value[i]));
    return m;
  }
};

/// One-sided U_x at the boundary: slope of U across the cell holding b(t).
inline TimeSeries smooth_fit_residual(const ValueSurface& U, const Boundary& b) {
  if (U.kind() != SurfaceKind::U) throw DomainError("smooth_fit_residual: surface must be U");
  if (!(U.time_grid() == b.grid())) throw GridMismatch("smooth_fit_residual: time grids differ");
  const auto& sg = U.space_grid();
  TimeSeries out;
  for (std::size_t i = 0; i + 1 < U.rows(); ++i) {
    std::size_t k = sg.cell_of(b[i]);
    if (k > 0 && sg[k] == b[i]) --k;  // approach from the left
    out.t.push_back(U.time_grid()[i]);
    out.value.push_back((U.at(i, k + 1) - U.at(i, k)) / (sg[k + 1] - sg[k]));
  }
  return out;
}

/// U_x(t,0) + lambda U(t,0) with a second-order one-sided derivative.
inline TimeSeries creation_residual(const ValueSurface& U, const ModelParams& p) {
  if (U.kind() != SurfaceKind::U) throw DomainError("creation_residual: surface must be U");
  const auto& sg = U.space_grid();
  const double h1 = sg[1] - sg[0], h2 = sg[2] - sg[1];
  TimeSeries out;
  for (std::size_t i = 0; i + 1 < U.rows(); ++i) {
    const double u0 = U.at(i, 0), u1 = U.at(i, 1), u2 = U.at(i, 2);
    // Three-point derivative at x0 on a possibly non-uniform stencil.
    const double ux = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * u0 + (h1 + h2) / (h1 * h2) * u1 -
                      h1 / (h2 * (h1 + h2)) * u2;
    out.t.push_back(U.time_grid()[i]);
    out.value.push_back(ux + p.lambda() * u0);
  }
  return out;
}

/// Value of the dividend problem when mu <= 0: pay everything at once.
inline double trivial_value(const ModelParams& p, double t, double x) {
  if (p.nontrivial()) throw DomainError("trivial_value: requires mu <= 0");
  if (t < 0.0 || t > p.horizon() || x < 0.0)
    throw DomainError("trivial_value: requires t in [0, T] and x >= 0");
  return x;
}

/// x_max must be at least twice the initial barrier.
inline void check_xmax(const SpaceGrid& sg, const Boundary& b) {
  if (sg.x_max() < 2.0 * b[0])
    throw XmaxTooSmall("check_xmax: x_max=" + std::to_string(sg.x_max()) +
                       " is below 2 b(0)=" + std::to_string(2.0 * b[0]));
}

}  // namespace divbar
