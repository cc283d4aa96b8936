#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sqmle/optimizer.hpp"

using namespace sqmle;

namespace {

double concave_quadratic(std::span<const double> x) {
  const double a = x[0] - 1.0, b = x[1] + 0.5;
  return -(2.0 * a * a + a * b + b * b);
}

std::vector<double> concave_quadratic_grad(std::span<const double> x) {
  const double a = x[0] - 1.0, b = x[1] + 0.5;
  return {-(4.0 * a + b), -(a + 2.0 * b)};
}

const Box kBox{{-5.0, -5.0}, {5.0, 5.0}};

}  // namespace

TEST(Optimizer, NelderMeadFindsInteriorMaximum) {
  const auto r = nelder_mead_maximize(concave_quadratic, {3.0, 3.0}, kBox, LocalOptions{});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.x[1], -0.5, 1e-6);
  EXPECT_NEAR(r.value, 0.0, 1e-12);
}

TEST(Optimizer, BfgsFindsInteriorMaximum) {
  const auto r = projected_bfgs_maximize(concave_quadratic, concave_quadratic_grad, {3.0, 3.0}, kBox, LocalOptions{});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.x[1], -0.5, 1e-6);
}

TEST(Optimizer, MaximumOnBoundary) {
  // Unconstrained maximizer at (8, -0.5) lies outside the box.
  auto f = [](std::span<const double> x) { return -((x[0] - 8) * (x[0] - 8) + (x[1] + 0.5) * (x[1] + 0.5)); };
  auto g = [](std::span<const double> x) { return std::vector<double>{-2 * (x[0] - 8), -2 * (x[1] + 0.5)}; };
  const auto nm = nelder_mead_maximize(f, {0.0, 0.0}, kBox, LocalOptions{});
  EXPECT_NEAR(nm.x[0], 5.0, 1e-6);
  EXPECT_NEAR(nm.x[1], -0.5, 1e-5);
  EXPECT_TRUE(kBox.contains(nm.x));
  const auto bf = projected_bfgs_maximize(f, g, {0.0, 0.0}, kBox, LocalOptions{});
  EXPECT_NEAR(bf.x[0], 5.0, 1e-6);
  EXPECT_NEAR(bf.x[1], -0.5, 1e-5);
  EXPECT_TRUE(kBox.contains(bf.x));
}

TEST(Optimizer, StartOutsideBoxIsClamped) {
  const auto r = nelder_mead_maximize(concave_quadratic, {50.0, -50.0}, kBox, LocalOptions{});
  EXPECT_TRUE(kBox.contains(r.x));
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
}

TEST(Optimizer, NonFiniteRegionIsAvoided) {
  auto f = [](std::span<const double> x) {
    if (x[0] < 0.0) return std::numeric_limits<double>::quiet_NaN();
    return -(x[0] - 1) * (x[0] - 1) - x[1] * x[1];
  };
  const auto r = nelder_mead_maximize(f, {0.5, 1.0}, kBox, LocalOptions{});
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.x[1], 0.0, 1e-6);
}

TEST(Optimizer, IterationCapReportsNonConvergence) {
  LocalOptions o;
  o.max_iter = 3;
  const auto r = nelder_mead_maximize(concave_quadratic, {3.0, 3.0}, kBox, o);
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.iterations, 3);
}

TEST(Optimizer, Deterministic) {
  const auto a = nelder_mead_maximize(concave_quadratic, {2.0, -3.0}, kBox, LocalOptions{});
  const auto b = nelder_mead_maximize(concave_quadratic, {2.0, -3.0}, kBox, LocalOptions{});
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(Optimizer, Rosenbrock) {
  auto f = [](std::span<const double> x) {
    return -(100 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]) + (1 - x[0]) * (1 - x[0]));
  };
  auto g = [](std::span<const double> x) {
    const double t = x[1] - x[0] * x[0];
    return std::vector<double>{-(-400 * x[0] * t - 2 * (1 - x[0])), -(200 * t)};
  };
  const auto nm = nelder_mead_maximize(f, {-1.2, 1.0}, kBox, LocalOptions{});
  EXPECT_NEAR(nm.x[0], 1.0, 1e-5);
  EXPECT_NEAR(nm.x[1], 1.0, 1e-5);
  const auto bf = projected_bfgs_maximize(f, g, {-1.2, 1.0}, kBox, LocalOptions{});
  EXPECT_NEAR(bf.x[0], 1.0, 1e-5);
  EXPECT_NEAR(bf.x[1], 1.0, 1e-5);
}
