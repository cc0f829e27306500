#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "divbar/errors.hpp"

namespace divbar {

/// Constants of the dividend problem dX = mu dt + sigma dB - dD,
/// discounted at rate r over the horizon [0, horizon_T].
class ModelParams {
 public:
  ModelParams(double mu, double sigma, double r, double horizon_T)
      : mu_(mu), sigma_(sigma), r_(r), horizon_(horizon_T) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw DomainError("ModelParams: sigma must be positive and finite");
    if (!(horizon_T > 0.0) || !std::isfinite(horizon_T))
      throw DomainError("ModelParams: horizon_T must be positive and finite");
    if (!(r >= 0.0) || !std::isfinite(r))
      throw DomainError("ModelParams: r must be non-negative and finite");
    if (!std::isfinite(mu)) throw DomainError("ModelParams: mu must be finite");
    lambda_ = 2.0 * mu_ / (sigma_ * sigma_);
  }

  double mu() const { return mu_; }
  double sigma() const { return sigma_; }
  double r() const { return r_; }
  double horizon() const { return horizon_; }
  /// Creation rate 2 mu / sigma^2 of the linked stopping problem.
  double lambda() const { return lambda_; }

  /// True when the dividend problem has a non-trivial barrier (mu > 0).
  bool nontrivial() const { return mu_ > 0.0; }

  /// Throws TrivialCase when mu <= 0; solver entry points call this first.
  void require_nontrivial(const char* where) const {
    if (!nontrivial()) throw TrivialCase(where);
  }

 private:
  double mu_;
  double sigma_;
  double r_;
  double horizon_;
  double lambda_;
};

inline double lambda_of(const ModelParams& p) { return p.lambda(); }

namespace detail {

inline void check_nodes(std::span<const double> nodes, const char* what) {
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (!(nodes[i] > nodes[i - 1]))
      throw DomainError(std::string(what) + ": nodes must be strictly increasing");
  }
}

/// Index k with nodes[k] <= v <= nodes[k+1], clamped to the valid cell range.
inline std::size_t locate_cell(std::span<const double> nodes, double v) {
  auto it = std::upper_bound(nodes.begin(), nodes.end(), v);
  std::size_t k = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
  return std::min(k, nodes.size() - 2);
}

}  // namespace detail

/// Discretisation of [0, T]; first node 0, last node T exactly.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 3) throw DomainError("TimeGrid: need at least 3 nodes");
    if (nodes_.front() != 0.0) throw DomainError("TimeGrid: first node must be 0");
    detail::check_nodes(nodes_, "TimeGrid");
  }

  static TimeGrid uniform(double horizon_T, std::size_t steps) {
    if (steps < 2) throw DomainError("TimeGrid: need at least 2 steps");
    std::vector<double> t(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i)
      t[i] = horizon_T * static_cast<double>(i) / static_cast<double>(steps);
    t.back() = horizon_T;
    return TimeGrid(std::move(t));
  }

  std::size_t count() const { return nodes_.size(); }
  double operator[](std::size_t i) const { return nodes_[i]; }
  double horizon() const { return nodes_.back(); }
  std::span<const double> nodes() const { return nodes_; }
  std::size_t cell_of(double t) const { return detail::locate_cell(nodes_, t); }

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> nodes_;
};

/// Discretisation of fund levels [0, x_max].
class SpaceGrid {
 public:
  explicit SpaceGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 3) throw DomainError("SpaceGrid: need at least 3 nodes");
    if (nodes_.front() != 0.0) throw DomainError("SpaceGrid: first node must be 0");
    detail::check_nodes(nodes_, "SpaceGrid");
  }

  static SpaceGrid uniform(double x_max, std::size_t steps) {
    if (steps < 2) throw DomainError("SpaceGrid: need at least 2 steps");
    if (!(x_max > 0.0)) throw DomainError("SpaceGrid: x_max must be positive");
    std::vector<double> x(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i)
      x[i] = x_max * static_cast<double>(i) / static_cast<double>(steps);
    x.back() = x_max;
    return SpaceGrid(std::move(x));
  }

  std::size_t count() const { return nodes_.size(); }
  double operator[](std::size_t i) const { return nodes_[i]; }
  double x_max() const { return nodes_.back(); }
  std::span<const double> nodes() const { return nodes_; }
  std::size_t cell_of(double x) const { return detail::locate_cell(nodes_, x); }
  /// Largest cell width; equals the spacing on uniform grids.
  double max_step() const {
    double h = 0.0;
    for (std::size_t i = 1; i < nodes_.size(); ++i) h = std::max(h, nodes_[i] - nodes_[i - 1]);
    return h;
  }

  bool operator==(const SpaceGrid&) const = default;

 private:
  std::vector<double> nodes_;
};

/// Optimal dividend barrier b(t) on a time grid, piecewise linear in t.
///
/// Invariants: non-increasing, strictly positive before T, zero at T.
class Boundary {
 public:
  Boundary(TimeGrid grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.count())
      throw GridMismatch("Boundary: values and grid differ in length");
    validate();
  }

  /// Constant level c on [0, T) and c at T as well (no terminal liquidation).
  static Boundary constant(TimeGrid grid, double c) {
    std::vector<double> v(grid.count(), c);
    return Boundary(std::move(grid), std::move(v), Unchecked{});
  }

  /// Builds a boundary without the positivity/terminal checks; used for
  /// perturbed or trial curves.
  static Boundary unchecked(TimeGrid grid, std::vector<double> values) {
    if (values.size() != grid.count())
      throw GridMismatch("Boundary: values and grid differ in length");
    return Boundary(std::move(grid), std::move(values), Unchecked{});
  }

  const TimeGrid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t count() const { return values_.size(); }

  /// Piecewise-linear interpolation; clamps outside [0, T].
  double operator()(double t) const {
    if (t <= grid_[0]) return values_.front();
    if (t >= grid_.horizon()) return values_.back();
    std::size_t k = grid_.cell_of(t);
    double w = (t - grid_[k]) / (grid_[k + 1] - grid_[k]);
    return values_[k] + w * (values_[k + 1] - values_[k]);
  }

 private:
  struct Unchecked {};
  Boundary(TimeGrid grid, std::vector<double> values, Unchecked)
      : grid_(std::move(grid)), values_(std::move(values)) {}

  void validate() const {
    if (values_.back() != 0.0) throw DomainError("Boundary: b(T) must be exactly 0");
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
      if (!(values_[i] > 0.0) || !std::isfinite(values_[i]))
        throw DomainError("Boundary: b(t) must be positive for t < T");
      if (values_[i] < values_[i + 1])
        throw NonMonotone("Boundary: b must be non-increasing in t");
    }
  }

  TimeGrid grid_;
  std::vector<double> values_;
};

}  // namespace divbar
