#pragma once

// Laws of the running maximum S_t = sup_{s<=t} Y_s of Y_s = -mu s + sigma B_s
// and of the reflected process X^x_s = (x v S_s) - Y_s.  All functions are pure.

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "divbar/errors.hpp"
#include "divbar/model.hpp"

namespace divbar {

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * (0.5 * std::numbers::sqrt2)); }

/// log Phi(x), accurate far into the left tail.
inline double log_norm_cdf(double x) {
  if (x > -30.0) return std::log(norm_cdf(x));
  // Mills-ratio expansion.
  double x2 = x * x;
  double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

/// exp(a) * Phi(x) without overflow of the exponential factor.
inline double exp_times_cdf(double a, double x) {
  if (a < 500.0) return std::exp(a) * norm_cdf(x);
  return std::exp(a + log_norm_cdf(x));
}

/// Adaptive Gauss-Kronrod (15-point) on [a, b].
template <class F>
double integrate_adaptive(F&& f, double a, double b, double tol = 1e-10, unsigned max_depth = 20) {
  if (!(b > a)) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth, tol,
                                                                        &err);
}

/// P(S_t >= z), by the reflection-principle closed form.
inline double running_max_tail(double t, double z, const ModelParams& p) {
  if (t < 0.0 || z < 0.0 || std::isnan(t) || std::isnan(z))
    throw DomainError("running_max_tail: requires t >= 0 and z >= 0");
  if (z == 0.0) return 1.0;
  if (t == 0.0) return 0.0;
  const double u = p.sigma() * std::sqrt(t);
  const double mt = p.mu() * t;
  double v = norm_cdf((-z - mt) / u) + exp_times_cdf(-p.lambda() * z, (-z + mt) / u);
  return std::clamp(v, 0.0, 1.0);
}

/// Mass of S_t at 0: one at t = 0 and zero afterwards.
inline double running_max_atom(double t, const ModelParams& p) {
  if (t < 0.0) throw DomainError("running_max_atom: requires t >= 0");
  if (t == 0.0) return 1.0;
  const double u = p.sigma() * std::sqrt(t);
  const double mt = p.mu() * t;
  // 1 - lim_{z->0+} P(S_t >= z)
  return std::max(0.0, 1.0 - norm_cdf(-mt / u) - norm_cdf(mt / u));
}

/// Density of S_t at z > 0 (the absolutely continuous part).
inline double running_max_density(double t, double z, const ModelParams& p) {
  if (t <= 0.0 || z < 0.0 || std::isnan(t) || std::isnan(z))
    throw DomainError("running_max_density: requires t > 0 and z >= 0");
  const double u = p.sigma() * std::sqrt(t);
  const double mt = p.mu() * t;
  // e^{-lambda z} phi((mt - z)/u) == phi((z + mt)/u)
  return 2.0 * norm_pdf((z + mt) / u) / u +
         p.lambda() * exp_times_cdf(-p.lambda() * z, (mt - z) / u);
}

/// E[ e^{lambda (x v S_s - x)} 1{X^x_s >= c} ]: the creation-weighted survival
/// of the reflected process above c.  Closed form; c = 0 gives the exp-moment.
inline double weighted_survival(double s, double x, double c, const ModelParams& p) {
  if (s < 0.0 || x < 0.0 || c < 0.0 || std::isnan(s) || std::isnan(x) || std::isnan(c))
    throw DomainError("weighted_survival: requires s, x, c >= 0");
  if (s == 0.0) return x >= c ? 1.0 : 0.0;
  const double lam = p.lambda();
  const double u = p.sigma() * std::sqrt(s);
  const double ms = p.mu() * s;
  const double d = (ms - x - c) / u;
  // {S <= x, Y <= x - c} contributes Phi((x - c + mu s)/u) - e^{-lam x} Phi(d);
  // {S > x, S - Y >= c} weighted by e^{lam (S - x)} integrates in closed form.
  const double cd = norm_cdf(d);
  const double bracket = cd + lam * u * (d * cd + norm_pdf(d));
  double v = norm_cdf((x - c + ms) / u);
  if (bracket != 0.0) {
    if (bracket > 0.0)
      v += std::exp(-lam * x + std::log(bracket));
    else
      v += std::exp(-lam * x) * bracket;
  }
  if (!std::isfinite(v)) throw OverflowError("weighted_survival: value not representable");
  return v;
}

/// E[ e^{lambda (x v S_t - x)} ].
inline double exp_max_moment(double t, double x, const ModelParams& p) {
  if (t < 0.0 || x < 0.0 || std::isnan(t) || std::isnan(x))
    throw DomainError("exp_max_moment: requires t >= 0 and x >= 0");
  if (t == 0.0) return 1.0;
  return weighted_survival(t, x, 0.0, p);
}

/// P(X^x_s >= c) for the reflected process X^x = (x v S) - Y.
///
/// Splits on {S_s <= x} (closed form) and {S_s > x}, where the joint law of
/// (S_s, Y_s) is integrated over the level of the maximum with adaptive
/// Gauss-Kronrod, truncated where the Gaussian envelope is below 1e-12.
inline double reflected_survival(double s, double x, double c, const ModelParams& p) {
  if (s < 0.0 || x < 0.0 || c < 0.0 || std::isnan(s) || std::isnan(x) || std::isnan(c))
    throw DomainError("reflected_survival: requires s, x, c >= 0");
  if (c == 0.0) return 1.0;
  if (s == 0.0) return x >= c ? 1.0 : 0.0;
  const double lam = p.lambda();
  const double u = p.sigma() * std::sqrt(s);
  const double ms = p.mu() * s;
  const double below = norm_cdf((x - c + ms) / u) - exp_times_cdf(-lam * x, (ms - x - c) / u);
  // P(S in dm, Y <= m - c) = e^{-lam m} [lam Phi(d(m)) + 2 phi(d(m))/u] dm
  auto integrand = [&](double m) {
    const double d = (ms - m - c) / u;
    return exp_times_cdf(-lam * m, d) * lam + 2.0 * std::exp(-lam * m) * norm_pdf(d) / u;
  };
  // Phi(d), phi(d) < 1e-12 once d < -7.1; 9 standard deviations is conservative.
  const double z_star = std::max(x, ms - c + 9.0 * u);
  double above = 0.0;
  if (z_star > x) above = integrate_adaptive(integrand, x, z_star);
  return std::clamp(below + above, 0.0, 1.0);
}

}  // namespace divbar
