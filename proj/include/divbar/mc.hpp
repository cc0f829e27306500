#pragma once

// Monte Carlo for the dividend problem under barrier strategies and for the
// linked stopping problem with creation at zero.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "divbar/errors.hpp"
#include "divbar/model.hpp"
#include "divbar/rng.hpp"

namespace divbar {

struct McConfig {
  std::size_t n_paths = 200000;
  double dt = 1e-3;
  std::uint64_t seed = 20240601;
  /// Brownian-bridge treatment of hitting 0, barrier crossings and running maxima.
  bool bridge_correction = true;
  bool antithetic = false;
  /// Threads; 0 means hardware concurrency.
  unsigned workers = 0;

  void validate(const ModelParams& p) const {
    if (n_paths < 1) throw ConfigError("McConfig: n_paths must be >= 1");
    if (antithetic && n_paths % 2 != 0)
      throw ConfigError("McConfig: antithetic sampling needs an even n_paths");
    if (!(dt > 0.0) || dt > p.horizon() / 10.0)
      throw ConfigError("McConfig: dt must lie in (0, T/10]");
  }
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

/// Diagnostic trace of one controlled fund path.
struct PathRecord {
  std::vector<double> times;
  std::vector<double> fund;       // X^D after dividends
  std::vector<double> dividends;  // cumulative D
  bool absorbed = false;
  double absorption_time = std::numeric_limits<double>::infinity();
};

/// Diagnostic trace of one path of the reflected process.
struct StoppingPathRecord {
  std::vector<double> times;
  std::vector<double> level;       // X^x = (x v S) - Y
  std::vector<double> local_time;  // (x v S) - x
  bool stopped = false;
  double tau = 0.0;
};

namespace detail {

inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double a : v) s += a;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// Mean and standard error from per-sample values.
inline McEstimate summarize(std::span<const double> samples, std::size_t n_paths,
                            std::uint64_t seed) {
  McEstimate e;
  const double n = static_cast<double>(samples.size());
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  // Degenerate samples (a deterministic payoff) are reported exactly.
  const bool constant = *lo == *hi;
  e.mean = constant ? *lo : pairwise_sum(samples) / n;
  if (samples.size() > 1 && !constant) {
    std::vector<double> sq(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double d = samples[i] - e.mean;
      sq[i] = d * d;
    }
    e.std_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  }
  e.ci_lo = e.mean - 1.96 * e.std_error;
  e.ci_hi = e.mean + 1.96 * e.std_error;
  e.n_paths = n_paths;
  e.seed = seed;
  return e;
}

/// Evaluates path(index, sign) for every sample; antithetic pairs share an
/// index and flip the sign of the Gaussian increments.
template <class PathFn>
McEstimate run_paths(const McConfig& cfg, PathFn&& path) {
  const std::size_t n_samples = cfg.antithetic ? cfg.n_paths / 2 : cfg.n_paths;
  std::vector<double> samples(n_samples);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      samples[i] = cfg.antithetic ? 0.5 * (path(i, 1.0) + path(i, -1.0)) : path(i, 1.0);
    }
  };
  unsigned workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_samples));
  if (workers <= 1) {
    work(0, n_samples);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_samples + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk, e = std::min(n_samples, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return summarize(samples, cfg.n_paths, cfg.seed);
}

/// Step layout over the remaining horizon and barrier levels at each step.
struct StepPlan {
  std::size_t steps = 0;
  double h = 0.0;
  std::vector<double> barrier;  // barrier[k] = level at offset k h
};

template <class Barrier>
StepPlan make_plan(double horizon_left, double dt, Barrier&& barrier_at) {
  StepPlan plan;
  if (horizon_left > 0.0) {
    plan.steps = static_cast<std::size_t>(std::ceil(horizon_left / dt - 1e-9));
    plan.steps = std::max<std::size_t>(plan.steps, 1);
    plan.h = horizon_left / static_cast<double>(plan.steps);
  }
  plan.barrier.resize(plan.steps + 1);
  for (std::size_t k = 0; k <= plan.steps; ++k) {
    const double s = k == plan.steps ? horizon_left : static_cast<double>(k) * plan.h;
    plan.barrier[k] = barrier_at(s);
  }
  return plan;
}

/// Discounted dividends of one path reflected at the planned barrier and
/// absorbed at 0. The running-sup payout D_k = max(D_{k-1}, sup (R - b))
/// is evaluated with the bridge maximum inside each step.
inline double dividend_path(const ModelParams& p, const StepPlan& plan, double x,
                            const McConfig& cfg, std::uint64_t index, double sign,
                            PathRecord* rec = nullptr) {
  const double mu = p.mu(), sigma = p.sigma(), r = p.r();
  const double h = plan.h, sqh = std::sqrt(h), var = sigma * sigma * h;

  double paid = std::max(0.0, x - plan.barrier[0]);
  double fund = x - paid;
  double pv = paid;
  if (rec) {
    rec->times = {0.0};
    rec->fund = {fund};
    rec->dividends = {paid};
  }
  auto absorb = [&](double s) {
    if (rec) {
      rec->absorbed = true;
      rec->absorption_time = s;
    }
  };
  if (fund <= 0.0) {
    absorb(0.0);
    return pv;
  }

  PathRng rng(cfg.seed, index);
  for (std::size_t k = 1; k <= plan.steps; ++k) {
    const double s = static_cast<double>(k) * h;
    const double z = sign * rng.normal();
    const double u_ruin = rng.uniform();
    const double u_max = rng.uniform();

    const double pre = fund + mu * h + sigma * sqh * z;
    if (pre <= 0.0 || (cfg.bridge_correction && u_ruin < std::exp(-2.0 * fund * pre / var))) {
      absorb(s);
      break;
    }
    const double a = fund - plan.barrier[k - 1];
    const double c = pre - plan.barrier[k];
    double excess = c;
    if (cfg.bridge_correction)
      excess = 0.5 * (a + c + std::sqrt((c - a) * (c - a) - 2.0 * var * std::log(u_max)));
    const double dd = std::clamp(excess, 0.0, pre);
    if (dd > 0.0) {
      pv += std::exp(-r * s) * dd;
      paid += dd;
    }
    fund = pre - dd;
    if (rec) {
      rec->times.push_back(s);
      rec->fund.push_back(fund);
      rec->dividends.push_back(paid);
    }
    if (fund <= 0.0) {
      absorb(s);
      break;
    }
  }
  return pv;
}

struct StoppingOutcome {
  double tau = 0.0;
  double local_time = 0.0;  // (x v S_tau) - x
};

/// One path of X^x = (x v S) - Y stopped at the first entry above the
/// barrier, or at the end of the horizon.
inline StoppingOutcome stopping_path(const ModelParams& p, const StepPlan& plan, double x,
                                     const McConfig& cfg, std::uint64_t index, double sign,
                                     StoppingPathRecord* rec = nullptr) {
  const double mu = p.mu(), sigma = p.sigma();
  const double h = plan.h, sqh = std::sqrt(h), var = sigma * sigma * h;
  if (rec) {
    rec->times = {0.0};
    rec->level = {x};
    rec->local_time = {0.0};
  }
  if (plan.steps == 0 || x >= plan.barrier[0]) {
    if (rec) rec->stopped = true;
    return {0.0, 0.0};
  }

  PathRng rng(cfg.seed, index);
  double y = 0.0, s_max = 0.0;
  for (std::size_t k = 1; k <= plan.steps; ++k) {
    const double s = static_cast<double>(k) * h;
    const double z = sign * rng.normal();
    const double u_max = rng.uniform();
    const double u_cross = rng.uniform();

    const double y_new = y - mu * h + sigma * sqh * z;
    double step_max = std::max(y, y_new);
    if (cfg.bridge_correction)
      step_max = 0.5 * (y + y_new + std::sqrt((y_new - y) * (y_new - y) - 2.0 * var * std::log(u_max)));
    const double s_new = std::max(s_max, step_max);
    const double level_prev = std::max(x, s_max) - y;
    const double level = std::max(x, s_new) - y_new;
    const double local = std::max(x, s_new) - x;

    if (rec) {
      rec->times.push_back(s);
      rec->level.push_back(level);
      rec->local_time.push_back(local);
    }
    bool stop = level >= plan.barrier[k];
    if (!stop && cfg.bridge_correction) {
      const double gap0 = plan.barrier[k - 1] - level_prev;
      const double gap1 = plan.barrier[k] - level;
      stop = gap0 > 0.0 && u_cross < std::exp(-2.0 * gap0 * gap1 / var);
    }
    if (stop) {
      if (rec) {
        rec->stopped = true;
        rec->tau = s;
      }
      return {s, local};
    }
    y = y_new;
    s_max = s_new;
  }
  const double horizon = static_cast<double>(plan.steps) * h;
  if (rec) rec->tau = horizon;
  return {horizon, std::max(x, s_max) - x};
}

inline void check_point(const ModelParams& p, double t, double x, const char* where) {
  if (!(t >= 0.0) || t > p.horizon() || !(x >= 0.0))
    throw DomainError(std::string(where) + ": requires t in [0, T] and x >= 0");
}

inline StepPlan plan_for(const ModelParams& p, const Boundary& b, double t, const McConfig& cfg) {
  return make_plan(p.horizon() - t, cfg.dt, [&](double s) { return b(std::min(t + s, p.horizon())); });
}

}  // namespace detail

/// Estimate of E[ int_{0-}^{gamma ^ (T-t)} e^{-rs} dD^b_s ] for the barrier
/// strategy reflecting the fund at b(t + s), including the initial lump
/// (x - b(t))^+.
inline McEstimate simulate_dividend_value(const ModelParams& p, const Boundary& b, double t,
                                          double x, const McConfig& cfg) {
  cfg.validate(p);
  detail::check_point(p, t, x, "simulate_dividend_value");
  const auto plan = detail::plan_for(p, b, t, cfg);
  return detail::run_paths(cfg, [&](std::size_t i, double sign) {
    return detail::dividend_path(p, plan, x, cfg, i, sign);
  });
}

/// Same as simulate_dividend_value with the barrier held at c up to T.
inline McEstimate simulate_suboptimal(const ModelParams& p, double c, double t, double x,
                                      const McConfig& cfg) {
  cfg.validate(p);
  detail::check_point(p, t, x, "simulate_suboptimal");
  if (!(c >= 0.0)) throw DomainError("simulate_suboptimal: barrier must be >= 0");
  const auto plan = detail::make_plan(p.horizon() - t, cfg.dt, [c](double) { return c; });
  return detail::run_paths(cfg, [&](std::size_t i, double sign) {
    return detail::dividend_path(p, plan, x, cfg, i, sign);
  });
}

/// Estimate of E[e^{lambda (x v S_tau - x) - r tau}] with tau the first entry
/// of X^x into {x >= b(t + s)}, capped at T - t.
inline McEstimate simulate_stopping_value(const ModelParams& p, const Boundary& b, double t,
                                          double x, const McConfig& cfg) {
  cfg.validate(p);
  detail::check_point(p, t, x, "simulate_stopping_value");
  const auto plan = detail::plan_for(p, b, t, cfg);
  const double lam = p.lambda(), r = p.r();
  return detail::run_paths(cfg, [&](std::size_t i, double sign) {
    const auto o = detail::stopping_path(p, plan, x, cfg, i, sign);
    return std::exp(lam * o.local_time - r * o.tau);
  });
}

/// Estimate of -lambda E[1{S_tau > x} e^{lambda (S_tau - x) - r tau}], the
/// spatial derivative U_x(t, x) at the optimal stopping time.
inline McEstimate ux_representation_estimate(const ModelParams& p, const Boundary& b, double t,
                                             double x, const McConfig& cfg) {
  cfg.validate(p);
  detail::check_point(p, t, x, "ux_representation_estimate");
  const auto plan = detail::plan_for(p, b, t, cfg);
  const double lam = p.lambda(), r = p.r();
  return detail::run_paths(cfg, [&](std::size_t i, double sign) {
    const auto o = detail::stopping_path(p, plan, x, cfg, i, sign);
    return o.local_time > 0.0 ? -lam * std::exp(lam * o.local_time - r * o.tau) : 0.0;
  });
}

/// Trace of dividend path number `index` (no antithetic flip).
inline PathRecord record_dividend_path(const ModelParams& p, const Boundary& b, double t,
                                       double x, const McConfig& cfg, std::uint64_t index) {
  cfg.validate(p);
  detail::check_point(p, t, x, "record_dividend_path");
  const auto plan = detail::plan_for(p, b, t, cfg);
  PathRecord rec;
  detail::dividend_path(p, plan, x, cfg, index, 1.0, &rec);
  return rec;
}

inline StoppingPathRecord record_stopping_path(const ModelParams& p, const Boundary& b, double t,
                                               double x, const McConfig& cfg,
                                               std::uint64_t index) {
  cfg.validate(p);
  detail::check_point(p, t, x, "record_stopping_path");
  const auto plan = detail::plan_for(p, b, t, cfg);
  StoppingPathRecord rec;
  detail::stopping_path(p, plan, x, cfg, index, 1.0, &rec);
  return rec;
}

}  // namespace divbar
