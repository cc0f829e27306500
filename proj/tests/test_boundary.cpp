#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "divbar/boundary_solver.hpp"
#include "divbar/pde.hpp"

using namespace divbar;

namespace {

const ModelParams bench(0.5, 1.0, 0.05, 1.0);

const Boundary& coarse() {
  static const Boundary b = [] {
    return solve_integral_equation(bench, IeSolverConfig::defaults(bench, TimeGrid::uniform(1.0, 100)));
  }();
  return b;
}

}  // namespace

TEST(Asymptote, PlugInValues) {
  const ModelParams unit(0.5, 1.0, 0.05, 1.0);
  EXPECT_NEAR(boundary_asymptote(1.0 - std::exp(-1.0), unit), 0.60653, 1e-5);
  const ModelParams two(0.5, 2.0, 0.05, 1.0);
  EXPECT_NEAR(boundary_asymptote(0.99, two), 0.42919, 1e-5);
  EXPECT_LT(boundary_asymptote(1.0 - 1e-12, unit), 1e-5);
  EXPECT_THROW(boundary_asymptote(1.0, unit), DomainError);
  const ModelParams longer(0.5, 1.0, 0.05, 2.0);
  EXPECT_THROW(boundary_asymptote(0.5, longer), DomainError);
}

TEST(IeResidual, ZeroBoundaryIsPositive) {
  const auto g = TimeGrid::uniform(1.0, 100);
  const auto zero = Boundary::unchecked(g, std::vector<double>(g.count(), 0.0));
  EXPECT_GT(ie_residual(zero, 0.0, bench), 0.0);
}

TEST(IeResidual, ShiftedBoundaryIsNegative) {
  const auto& b = coarse();
  std::vector<double> up(b.values().begin(), b.values().end());
  for (auto& v : up) v += 1.0;
  EXPECT_LT(ie_residual(Boundary::unchecked(b.grid(), up), 0.0, bench), 0.0);
}

TEST(IeResidual, SolvedBoundaryAtZero) {
  const auto cfg = IeSolverConfig::defaults(bench, TimeGrid::uniform(1.0, 100));
  EXPECT_LE(std::abs(ie_residual(coarse(), 0.0, bench)), 10.0 * cfg.root_tol);
  EXPECT_THROW(ie_residual(coarse(), 1.0, bench), DomainError);
}

TEST(IeSolver, TerminalZeroAndMonotone) {
  const auto& b = coarse();
  EXPECT_EQ(b.values().back(), 0.0);
  for (std::size_t i = 0; i + 1 < b.count(); ++i) {
    EXPECT_GT(b[i], 0.0);
    EXPECT_GE(b[i], b[i + 1]);
  }
}

TEST(IeSolver, ResidualsSmallAtEveryNode) {
  IeDiagnostics d;
  solve_integral_equation(bench, IeSolverConfig::defaults(bench, TimeGrid::uniform(1.0, 100)), &d);
  for (std::size_t i = 0; i + 1 < d.residuals.size(); ++i) EXPECT_LE(std::abs(d.residuals[i]), 1e-5);
}

TEST(IeSolver, TimeRefinementMovesInitialValueLessThanOneCell) {
  const auto fine =
      solve_integral_equation(bench, IeSolverConfig::defaults(bench, TimeGrid::uniform(1.0, 200)));
  const double space_cell = 4.0 / 800.0;
  EXPECT_LT(std::abs(fine[0] - coarse()[0]), space_cell);
}

TEST(IeSolver, AgreesWithPdeBoundaryWithinTwoCells) {
  const auto tg = TimeGrid::uniform(1.0, 400);
  const auto sg = SpaceGrid::uniform(4.0, 800);
  const auto b_ie = solve_integral_equation(bench, IeSolverConfig::defaults(bench, tg));
  const auto b_pde = extract_boundary(solve_U(bench, PdeConfig{tg, sg}));
  for (std::size_t i = 0; i < tg.count(); ++i)
    if (tg[i] <= 0.95) {
      EXPECT_LE(std::abs(b_ie[i] - b_pde[i]), 2.0 * sg.max_step()) << "t=" << tg[i];
    }
}

TEST(IeSolver, AsymptoteRatiosApproachOne) {
  const auto b = solve_integral_equation(bench, IeSolverConfig::defaults(bench, TimeGrid::uniform(1.0, 400)));
  const std::size_t n = b.count();
  std::vector<std::size_t> idx;
  for (std::size_t k = n - 7; k <= n - 3; ++k) idx.push_back(k);
  const auto r = asymptote_ratios(b, bench, idx);
  for (std::size_t k = 1; k < r.size(); ++k) EXPECT_LT(std::abs(r[k] - 1.0), std::abs(r[k - 1] - 1.0));
  EXPECT_GE(r.back(), 0.5);
  EXPECT_LE(r.back(), 1.5);
}

TEST(IeSolver, LiteralFormStaysClose) {
  auto cfg = IeSolverConfig::defaults(bench, TimeGrid::uniform(1.0, 100));
  cfg.form = IeForm::literal;
  const auto b = solve_integral_equation(bench, cfg);
  EXPECT_NEAR(b[0], coarse()[0], 0.05);
}

TEST(IeSolver, SmallBracketFails) {
  auto cfg = IeSolverConfig::defaults(bench, TimeGrid::uniform(1.0, 50));
  cfg.b_max = 0.3;
  EXPECT_THROW(solve_integral_equation(bench, cfg), NoBracket);
}

TEST(IeSolver, RejectsTrivialAndBadConfig) {
  const ModelParams flat(0.0, 1.0, 0.05, 1.0);
  const auto g = TimeGrid::uniform(1.0, 10);
  EXPECT_THROW(solve_integral_equation(flat, IeSolverConfig::defaults(flat, g)), TrivialCase);
  auto cfg = IeSolverConfig::defaults(bench, g);
  cfg.root_tol = 0.0;
  EXPECT_THROW(solve_integral_equation(bench, cfg), ConfigError);
  const auto other = IeSolverConfig::defaults(bench, TimeGrid::uniform(2.0, 10));
  EXPECT_THROW(solve_integral_equation(bench, other), GridMismatch);
}
