#include <cmath>

#include <gtest/gtest.h>

#include "divbar/app.hpp"

using namespace divbar;

namespace {

const ModelParams bench(0.5, 1.0, 0.05, 1.0);

struct Solved {
  ValueSurface U, V;
  Boundary b;
};

const Solved& solved() {
  static const Solved s = [] {
    PdeConfig cfg{TimeGrid::uniform(1.0, 400), SpaceGrid::uniform(4.0, 800)};
    auto U = solve_U(bench, cfg);
    auto b = extract_boundary(U);
    auto V = integrate_V(U);
    return Solved{std::move(U), std::move(V), std::move(b)};
  }();
  return s;
}

}  // namespace

TEST(SolveU, TerminalRowIsOne) {
  const auto& U = solved().U;
  for (std::size_t j = 0; j < U.cols(); ++j) EXPECT_EQ(U.at(U.rows() - 1, j), 1.0);
}

TEST(SolveU, ObstacleActiveAboveBoundary) {
  const auto& s = solved();
  const auto& sg = s.U.space_grid();
  for (std::size_t i = 0; i + 1 < s.U.rows(); ++i)
    for (std::size_t j = 0; j < s.U.cols(); ++j)
      if (sg[j] >= s.b[i] + 2.0 * sg.max_step()) {
        EXPECT_EQ(s.U.at(i, j), 1.0);
      }
}

TEST(SolveU, ShapeOnFullLattice) {
  const auto v = detail::shape_violations(solved().U, solved().V);
  EXPECT_LE(v.u_ge_1, 1e-12);
  EXPECT_LE(v.u_dec_t, 1e-12);
  EXPECT_LE(v.u_dec_x, 1e-8);
  EXPECT_LE(v.u_convex, 1e-8);
  EXPECT_LE(v.v_concave, 1e-8);
  EXPECT_LE(v.vx_ge_1, 1e-8);
  EXPECT_EQ(v.v_zero, 0.0);
}

TEST(SolveU, ImplicitSchemeAndPsorAgree) {
  PdeConfig cfg{TimeGrid::uniform(1.0, 100), SpaceGrid::uniform(4.0, 200)};
  const auto plain = solve_U(bench, cfg);
  cfg.use_psor = true;
  const auto refined = solve_U(bench, cfg);
  for (std::size_t j = 0; j < plain.cols(); ++j) EXPECT_NEAR(plain.at(0, j), refined.at(0, j), 1e-9);
  cfg.scheme = PdeScheme::implicit_projected;
  cfg.use_psor = false;
  EXPECT_NEAR(solve_U(bench, cfg).at(0, 0), plain.at(0, 0), 2e-2);
}

TEST(SolveU, SmallXmaxIsReported) {
  PdeConfig cfg{TimeGrid::uniform(1.0, 50), SpaceGrid::uniform(1.0, 100)};
  EXPECT_THROW(solve_U(bench, cfg), XmaxTooSmall);
  EXPECT_THROW(check_xmax(SpaceGrid::uniform(3.0, 10), solved().b), XmaxTooSmall);
}

TEST(SolveU, RejectsTrivialAndMismatchedGrids) {
  PdeConfig cfg{TimeGrid::uniform(1.0, 10), SpaceGrid::uniform(4.0, 10)};
  EXPECT_THROW(solve_U(ModelParams(-0.1, 1.0, 0.05, 1.0), cfg), TrivialCase);
  EXPECT_THROW(solve_U(ModelParams(0.5, 1.0, 0.05, 2.0), cfg), GridMismatch);
  const auto other = Boundary::constant(TimeGrid::uniform(1.0, 10), 1.0);
  EXPECT_THROW(smooth_fit_residual(solved().U, other), GridMismatch);
}

TEST(ExtractBoundary, TerminalZeroAndMonotone) {
  const auto& b = solved().b;
  EXPECT_EQ(b.values().back(), 0.0);
  for (std::size_t i = 0; i + 1 < b.count(); ++i) EXPECT_GE(b[i], b[i + 1]);
}

TEST(IntegrateV, TerminalRowAndLowerBound) {
  const auto& V = solved().V;
  const auto& sg = V.space_grid();
  for (std::size_t j = 0; j < V.cols(); ++j) EXPECT_EQ(V.at(V.rows() - 1, j), sg[j]);
  for (std::size_t i = 0; i < V.rows(); ++i)
    for (std::size_t j = 0; j < V.cols(); ++j) EXPECT_GE(V.at(i, j), sg[j]);
}

TEST(IntegrateV, DerivativeRecoversU) {
  const auto& s = solved();
  double worst = 0.0;
  for (std::size_t i : {std::size_t{0}, std::size_t{200}})
    for (std::size_t j = 1; j + 1 < s.V.cols(); ++j)
      worst = std::max(worst, std::abs(detail::row_derivative(s.V, i, j) - s.U.at(i, j)));
  EXPECT_LE(worst, 5.0 * s.V.space_grid().max_step());
}

TEST(SmoothFit, SmallAndNonPositive) {
  const auto& s = solved();
  const auto fit = smooth_fit_residual(s.U, s.b);
  EXPECT_LE(fit.max_abs_until(0.9), 10.0 * 0.005);
  for (double v : fit.value) EXPECT_LE(v, 1e-12);
  EXPECT_EQ(fit.t.size(), s.U.rows() - 1);
}

TEST(Creation, RobinResidualSmall) {
  EXPECT_LE(creation_residual(solved().U, bench).max_abs_until(0.95), 10.0 * 0.005);
}

TEST(Verification, ExactConditionsAndGenerator) {
  const auto& s = solved();
  const auto rep = verification_residuals(s.V, s.b, bench);
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(rep.find("verification_ii_v_at_zero")->value, 0.0);
  EXPECT_EQ(rep.find("verification_iii_terminal")->value, 0.0);
}

// Calibrates the generator constant: the continuation residual must decay
// at least at first order when both steps are halved.
TEST(Verification, GeneratorResidualDecaysUnderRefinement) {
  auto residual = [](std::size_t nt, std::size_t nx) {
    PdeConfig cfg{TimeGrid::uniform(1.0, nt), SpaceGrid::uniform(4.0, nx)};
    const auto U = solve_U(bench, cfg);
    return compute_verification_residuals(integrate_V(U), extract_boundary(U), bench).continuation;
  };
  const double coarse = residual(200, 400), mid = residual(400, 800), fine = residual(800, 1600);
  EXPECT_LE(mid / coarse, 0.6);
  EXPECT_LE(fine / mid, 0.6);
  EXPECT_LE(mid, ResidualTolerances{}.generator_constant * (0.005 + 0.0025));
}

TEST(TrivialValue, Examples) {
  EXPECT_EQ(trivial_value(ModelParams(-0.1, 1.0, 0.05, 1.0), 0.0, 2.0), 2.0);
  EXPECT_EQ(trivial_value(ModelParams(0.0, 1.0, 0.05, 1.0), 0.0, 0.0), 0.0);
  EXPECT_EQ(trivial_value(ModelParams(0.0, 1.0, 0.05, 1.0), 0.3, 7.3), 7.3);
  EXPECT_THROW(trivial_value(bench, 0.0, 1.0), DomainError);
}
