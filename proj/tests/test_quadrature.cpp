#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sqmle/errors.hpp"
#include "sqmle/quadrature.hpp"

using namespace sqmle;

TEST(Quadrature, PolynomialIsExact) {
  const auto r = quad::integrate([](double x) { return 3 * x * x - 2 * x + 1; }, -1.0, 2.0, 1e-14);
  EXPECT_NEAR(r.value, 9.0 - 3.0 + 3.0, 1e-13);
}

TEST(Quadrature, SmoothOscillatory) {
  const auto r = quad::integrate([](double x) { return std::cos(20 * x) * std::exp(-x); }, 0.0, 5.0, 1e-13);
  // int_0^5 e^{-x} cos(20x) dx = [e^{-x}(-cos 20x + 20 sin 20x)/401]_0^5
  const double F5 = std::exp(-5.0) * (-std::cos(100.0) + 20 * std::sin(100.0)) / 401.0;
  const double F0 = -1.0 / 401.0;
  EXPECT_NEAR(r.value, F5 - F0, 1e-12);
}

TEST(Quadrature, VectorValuedWithBreaks) {
  auto f = [](double x) { return std::array<double, 2>{std::sqrt(x), std::abs(x - 0.5)}; };
  const std::array<double, 3> br{0.0, 0.5, 1.0};
  const auto r = quad::integrate<2>(f, br, 1e-12);
  EXPECT_NEAR(r.value[0], 2.0 / 3.0, 1e-11);
  EXPECT_NEAR(r.value[1], 0.25, 1e-13);
}

TEST(Quadrature, ToInfinity) {
  auto f = [](double x) { return std::array<double, 1>{1.0 / (1.0 + x * x)}; };
  const auto r = quad::integrate_to_infinity<1>(f, 0.0, 1e-12);
  EXPECT_NEAR(r.value[0], std::numbers::pi / 2, 1e-10);
}

TEST(Quadrature, NonConvergenceThrowsWithResidual) {
  try {
    quad::integrate([](double x) { return 1.0 / x; }, 0.0, 1.0, 1e-14, 20);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(Quadrature, GaussLegendreExactness) {
  for (int n : {1, 2, 5, 10, 20}) {
    const auto g = quad::gauss_legendre(n);
    ASSERT_EQ(g.nodes.size(), static_cast<std::size_t>(n));
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += g.weights[static_cast<std::size_t>(i)] * std::pow(g.nodes[static_cast<std::size_t>(i)], deg);
      const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
      EXPECT_NEAR(s, exact, 1e-13) << "n=" << n << " deg=" << deg;
    }
  }
}
