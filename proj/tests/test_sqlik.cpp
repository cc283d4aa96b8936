#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sqmle/errors.hpp"
#include "sqmle/sqlik.hpp"
#include "test_util.hpp"

using namespace sqmle;

namespace {

constexpr double kPi = std::numbers::pi;

const StableKernel& cauchy() {
  static const StableKernel k(1.0);
  return k;
}
const StableKernel& cauchy_tabulated() {
  static const StableKernel k(1.0, KernelOptions{.closed_form_cauchy = false});
  return k;
}
const StableKernel& k15() {
  static const StableKernel k(1.5);
  return k;
}

ModelSpec with_box(ModelSpec m, const Theta& t, double half = 10.0) {
  m.bounds = testutil::box_around(t, half);
  m.theta_true = t;
  return m;
}

ModelSpec scale_only() {
  auto m = make_expression_model("0*alpha1", "exp(gamma1)", 1, 1);
  m.bounds = Box{{-1.0, -3.0}, {1.0, 3.0}};
  return m;
}

ObservationSeries simulated(const ModelSpec& m, const NoiseSpec& noise, std::size_t n, std::uint64_t seed,
                            double T = 1.0) {
  RngStream rng(seed, 3);
  return thin(simulate_fine(m, noise, T, n * 10, 0.0, rng), 10);
}

}  // namespace

TEST(Sqlik, ResidualExamples) {
  const auto m = with_box(make_builtin_model("trig-1d"), Theta{{-1.0}, {1.5}});
  const Theta th{{-0.7}, {0.4}};
  const double h = 0.02, beta = 1.5;
  std::vector<double> x{0.3};
  for (int j = 0; j < 6; ++j) {
    const double xp = x.back();
    x.push_back(xp + h * th.alpha[0] * xp + std::pow(h, 1 / beta) * std::exp(th.gamma[0] * std::cos(xp)));
  }
  const auto obs = ObservationSeries::from_values(x, h * 6);
  for (double e : residuals(obs, m, th, beta)) EXPECT_NEAR(e, 1.0, 1e-12);

  const auto flat = with_box(make_expression_model("0*alpha1", "1 + 0*gamma1", 1, 1), Theta{{0.0}, {0.0}});
  const auto o2 = ObservationSeries::from_values({0.0, 0.02, 0.04, 0.06}, 0.03);
  for (double e : residuals(o2, flat, Theta{{0.0}, {0.0}}, 1.0)) EXPECT_NEAR(e, 2.0, 1e-12);

  // Doubling c halves the residuals.
  const auto ou = with_box(make_builtin_model("ou-exp"), Theta{{-1.0}, {0.0}});
  const auto e1 = residuals(o2, ou, Theta{{-1.0}, {0.0}}, 1.5);
  const auto e2 = residuals(o2, ou, Theta{{-1.0}, {std::log(2.0)}}, 1.5);
  for (std::size_t j = 0; j < e1.size(); ++j) EXPECT_NEAR(e2[j], 0.5 * e1[j], 1e-14);
}

TEST(Sqlik, ModelViolationAndDomain) {
  auto m = make_expression_model("alpha1*x", "gamma1");
  m.bounds = Box{{-2.0, -2.0}, {2.0, 2.0}};
  const auto o = ObservationSeries::from_values({0.0, 0.1, 0.3}, 1.0);
  try {
    residuals(o, m, Theta{{0.0}, {-0.5}}, 1.0);
    FAIL();
  } catch (const ModelViolation& e) {
    EXPECT_NE(std::string(e.what()).find("scale"), std::string::npos);
  }
  EXPECT_THROW(quasi_loglik(o, m, Theta{{0.0}, {0.0}}, cauchy()), ModelViolation);
  EXPECT_THROW(residuals(o, m, Theta{{5.0}, {1.0}}, 1.0), DomainError);
}

TEST(Sqlik, SingleCauchyTerm) {
  const auto m = with_box(make_expression_model("0*alpha1", "1 + 0*gamma1", 1, 1), Theta{{0.0}, {0.0}});
  const Theta th{{0.0}, {0.0}};
  const auto o0 = ObservationSeries::from_values({2.0, 2.0}, 1.0);
  const auto o1 = ObservationSeries::from_values({2.0, 3.0}, 1.0);
  for (auto path : {LikPath::automatic, LikPath::general, LikPath::cauchy_explicit}) {
    EXPECT_NEAR(quasi_loglik(o0, m, th, cauchy(), path), -std::log(kPi), 1e-14);
    EXPECT_NEAR(quasi_loglik(o1, m, th, cauchy(), path), -std::log(2 * kPi), 1e-14);
  }
  EXPECT_NEAR(quasi_loglik(o0, m, th, cauchy(), LikPath::general), -1.1447298858494002, 1e-12);
}

TEST(Sqlik, TwoTermsAtOnePointFiveMatchInversionOracle) {
  const auto m = with_box(make_builtin_model("trig-1d"), Theta{{-1.0}, {1.5}});
  const Theta th{{-0.8}, {0.6}};
  const auto obs = ObservationSeries::from_values({0.2, 0.35, -0.1}, 0.5);
  const double h = obs.h, beta = 1.5;
  double expected = 0.0;
  for (std::size_t j = 1; j < obs.x.size(); ++j) {
    const double xp = obs.x[j - 1];
    const double c = std::exp(0.6 * std::cos(xp));
    const double eps = (obs.x[j] - xp - h * (-0.8 * xp)) / (std::pow(h, 1 / beta) * c);
    expected += std::log(stable_derivs_by_inversion(beta, eps, 1e-13).phi / (c * std::pow(h, 1 / beta)));
  }
  EXPECT_NEAR(quasi_loglik(obs, m, th, k15()), expected, 1e-8);
}

TEST(Sqlik, CauchyExplicitMatchesGeneralPath) {
  const auto m = with_box(make_builtin_model("trig-2d"), Theta{{-1.0, 1.0}, {1.5, 0.5}});
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst_tab = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x{U(gen)};
    for (int j = 0; j < 20; ++j) x.push_back(x.back() + 0.3 * U(gen) / (0.05 + std::abs(U(gen))));
    const auto obs = ObservationSeries::from_values(x, 0.5 + std::abs(U(gen)));
    const Theta th{{2 * U(gen), 2 * U(gen)}, {U(gen), U(gen)}};
    const double e = quasi_loglik(obs, m, th, cauchy(), LikPath::cauchy_explicit);
    const double g = quasi_loglik(obs, m, th, cauchy(), LikPath::general);
    EXPECT_NEAR(e, g, 1e-10 * (1 + std::abs(e)));
    const double t = quasi_loglik(obs, m, th, cauchy_tabulated(), LikPath::general);
    worst_tab = std::max(worst_tab, std::abs(t - e) / (1 + std::abs(e)));
  }
  EXPECT_LT(worst_tab, 1e-8);
}

TEST(Sqlik, ScoreMatchesFiniteDifferences) {
  const Theta t0{{-1.0, 1.0}, {1.5, 0.5}};
  const auto m = with_box(make_builtin_model("trig-2d"), t0);
  const auto obs = simulated(m, NoiseSpec::stable(1.5), 400, 21);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  for (int trial = 0; trial < 5; ++trial) {
    Theta th = t0;
    for (auto& v : th.alpha) v += U(gen);
    for (auto& v : th.gamma) v += U(gen);
    const auto f = [&](const std::vector<double>& p) { return quasi_loglik(obs, m, Theta::from_flat(p, 2), k15()); };
    const auto fd = testutil::fd_gradient(f, th.flat());
    const Eigen::VectorXd s = quasi_score(obs, m, th, k15());
    for (int i = 0; i < 4; ++i) {
      EXPECT_NEAR(s[i], fd[static_cast<std::size_t>(i)], 1e-5 * std::max(1.0, std::abs(s[i]))) << trial << " " << i;
    }
  }
}

TEST(Sqlik, HessianMatchesFiniteDifferencesAndIsSymmetric) {
  const Theta t0{{-1.0, 1.0}, {1.5, 0.5}};
  const auto m = with_box(make_builtin_model("trig-2d"), t0);
  for (double beta : {1.0, 1.5}) {
    const StableKernel& k = beta == 1.0 ? cauchy() : k15();
    const auto obs = simulated(m, NoiseSpec::stable(beta), 300, 8);
    const Theta th{{-0.8, 1.2}, {1.3, 0.6}};
    const Eigen::MatrixXd H = quasi_hessian(obs, m, th, k);
    EXPECT_TRUE(H.isApprox(H.transpose(), 0.0));
    for (int i = 0; i < 4; ++i) {
      const auto si = [&](const std::vector<double>& p) {
        return quasi_score(obs, m, Theta::from_flat(p, 2), k)[i];
      };
      const auto fd = testutil::fd_gradient(si, th.flat());
      for (int j = 0; j < 4; ++j) {
        EXPECT_NEAR(H(i, j), fd[static_cast<std::size_t>(j)], 1e-4 * std::max(1.0, std::abs(H(i, j))))
            << beta << " " << i << j;
      }
    }
  }
}

TEST(Sqlik, HessianMatchesChainRuleExpansion) {
  // Three observations, p_alpha = p_gamma = 1. Second derivatives of
  // sum_j [log phi(eps_j) - log c_j] expanded through eps(alpha, gamma).
  const auto m = with_box(make_builtin_model("trig-1d"), Theta{{-1.0}, {1.5}});
  const auto obs = ObservationSeries::from_values({0.4, 0.1, 0.55, 0.3}, 0.3);
  const double al = -0.7, ga = 0.9, h = obs.h;
  for (double beta : {1.0, 1.5}) {
    const StableKernel& k = beta == 1.0 ? cauchy() : k15();
    const double s = std::pow(h, 1 / beta);
    double haa = 0, hag = 0, hgg = 0;
    for (std::size_t j = 1; j < obs.x.size(); ++j) {
      const double x = obs.x[j - 1];
      const double a_a = x, a_aa = 0.0;
      const double c = std::exp(ga * std::cos(x)), c_g = std::cos(x) * c, c_gg = std::cos(x) * std::cos(x) * c;
      const double eps = (obs.x[j] - x - h * al * x) / (s * c);
      const double e_a = -h * a_a / (s * c);
      const double e_g = -eps * c_g / c;
      const double e_aa = -h * a_aa / (s * c);
      const double e_ag = h * a_a * c_g / (s * c * c);
      const double e_gg = eps * (2 * (c_g / c) * (c_g / c) - c_gg / c);
      const double L1 = k.g(eps), L2 = k.dg(eps);
      haa += L2 * e_a * e_a + L1 * e_aa;
      hag += L2 * e_a * e_g + L1 * e_ag;
      hgg += L2 * e_g * e_g + L1 * e_gg - (c_gg / c - (c_g / c) * (c_g / c));
    }
    const Eigen::MatrixXd H = quasi_hessian(obs, m, Theta{{al}, {ga}}, k);
    EXPECT_NEAR(H(0, 0), haa, 1e-10 * (1 + std::abs(haa))) << beta;
    EXPECT_NEAR(H(0, 1), hag, 1e-10 * (1 + std::abs(hag))) << beta;
    EXPECT_NEAR(H(1, 1), hgg, 1e-10 * (1 + std::abs(hgg))) << beta;
  }
}

TEST(Sqlik, ZeroResidualAlphaBlock) {
  const auto m = with_box(make_builtin_model("trig-2d"), Theta{{-1.0, 1.0}, {1.5, 0.5}});
  const Theta th{{-1.0, 1.0}, {1.5, 0.5}};
  const double h = 0.01;
  std::vector<double> x{0.5};
  for (int j = 0; j < 50; ++j) x.push_back(x.back() + h * (-x.back() + 1.0 / (1 + x.back() * x.back())));
  const auto obs = ObservationSeries::from_values(x, h * 50);
  for (double beta : {1.0, 1.5}) {
    const StableKernel& k = beta == 1.0 ? cauchy() : k15();
    for (double e : residuals(obs, m, th, beta)) ASSERT_NEAR(e, 0.0, 1e-12);
    const Eigen::VectorXd s = quasi_score(obs, m, th, k);
    EXPECT_NEAR(s[0], 0.0, 1e-10);
    EXPECT_NEAR(s[1], 0.0, 1e-10);
    const double r = drift_rate_factor(h, beta);
    Eigen::Matrix2d expected = Eigen::Matrix2d::Zero();
    for (std::size_t j = 0; j + 1 < x.size(); ++j) {
      const double xp = x[j];
      const double c = std::exp(1.5 * std::cos(xp) + 0.5 * std::sin(xp));
      Eigen::Vector2d da(xp, 1.0 / (1 + xp * xp));
      expected += r * r * k.dg(0.0) * da * da.transpose() / (c * c);
    }
    const Eigen::MatrixXd H = quasi_hessian(obs, m, th, k);
    EXPECT_TRUE(H.topLeftCorner(2, 2).isApprox(expected, 1e-12)) << H;
    EXPECT_LT(k.dg(0.0), 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-H.topLeftCorner(2, 2));
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Sqlik, ShiftInvariance) {
  // Values on a dyadic grid make the shift exact in floating point.
  RngStream rng(2, 0);
  std::vector<double> x{0.0};
  for (int j = 0; j < 200; ++j) x.push_back(std::ldexp(std::round(std::ldexp(x.back() + 0.1 * rng.normal(), 20)), -20));
  std::vector<double> xs = x;
  for (auto& v : xs) v += 4.0;
  auto m0 = make_expression_model("alpha1*(x - 2)", "exp(gamma1*cos(x - 2))");
  auto m1 = make_expression_model("alpha1*(x - 6)", "exp(gamma1*cos(x - 6))");
  m0.bounds = m1.bounds = Box{{-5, -5}, {5, 5}};
  const auto o0 = ObservationSeries::from_values(x, 1.0);
  const auto o1 = ObservationSeries::from_values(xs, 1.0);
  const Theta th{{-0.9}, {0.7}};
  EXPECT_EQ(quasi_loglik(o0, m0, th, k15()), quasi_loglik(o1, m1, th, k15()));
  EXPECT_EQ(quasi_loglik(o0, m0, th, cauchy()), quasi_loglik(o1, m1, th, cauchy()));
}

TEST(Sqlik, ArgmaxInvariantUnderPositiveScaling) {
  const Theta t0{{-1.0}, {1.5}};
  const auto m = with_box(make_builtin_model("trig-1d"), t0);
  const auto obs = simulated(m, NoiseSpec::nig(5.0), 500, 6);
  const auto H = [&](std::span<const double> p) { return quasi_loglik(obs, m, Theta::from_flat(p, 1), cauchy()); };
  const auto a = nelder_mead_maximize(H, {0.0, 0.0}, m.bounds, LocalOptions{});
  const auto b = nelder_mead_maximize([&](std::span<const double> p) { return 4.0 * H(p); }, {0.0, 0.0}, m.bounds,
                                      LocalOptions{});
  const auto c = nelder_mead_maximize([&](std::span<const double> p) { return 2.7 * H(p); }, {0.0, 0.0}, m.bounds,
                                      LocalOptions{});
  EXPECT_EQ(a.x, b.x);
  EXPECT_NEAR(a.x[0], c.x[0], 1e-6);
  EXPECT_NEAR(a.x[1], c.x[1], 1e-6);
}

TEST(Sqlik, ScaleOnlyFitSolvesScoreEquation) {
  const auto m = scale_only();
  const double h = 0.01;
  // Value-only search resolves gamma to about sqrt(eps |H| / H''), so the
  // simplex case uses a short series.
  for (auto [method, n] : {std::pair{OptimizerMethod::simplex, std::size_t{50}},
                           std::pair{OptimizerMethod::bfgs, std::size_t{600}}}) {
    RngStream noise_rng(9, 0);
    const auto dJ = sample_stable(1.0, h, n, noise_rng);
    std::vector<double> x{0.0};
    for (double d : dJ) x.push_back(x.back() + std::exp(0.3) * d);
    const auto obs = ObservationSeries::from_values(x, h * static_cast<double>(n));
    // Oracle: bisection on S(gamma) = sum k_1(eps_j(gamma)), k_1(e) = (1 - e^2) / (1 + e^2).
    const auto S = [&](double g) {
      double s = 0.0;
      for (std::size_t j = 1; j < x.size(); ++j) {
        const double e = (x[j] - x[j - 1]) / (h * std::exp(g));
        s += (1 - e * e) / (1 + e * e);
      }
      return s;
    };
    double lo = -3.0, hi = 3.0;
    ASSERT_LT(S(lo) * S(hi), 0.0);
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (S(lo) * S(mid) <= 0 ? hi : lo) = mid;
    }
    OptimizerConfig opt;
    opt.method = method;
    opt.xtol = 1e-13;
    opt.restarts = 4;
    RngStream rng(1, 1);
    const auto r = fit(obs, m, cauchy(), opt, rng);
    EXPECT_LT(std::abs(S(r.theta_hat.gamma[0])), 1e-6) << to_string(method);
    EXPECT_NEAR(r.theta_hat.gamma[0], 0.5 * (lo + hi), 1e-7) << to_string(method);
    EXPECT_NEAR(quasi_score(obs, m, r.theta_hat, cauchy())[1], -S(r.theta_hat.gamma[0]), 1e-9);
  }
}

TEST(Sqlik, FitIsDeterministicAndBeatsStarts) {
  const Theta t0{{-1.0, 1.0}, {1.5, 0.5}};
  const auto m = with_box(make_builtin_model("trig-2d"), t0);
  const auto obs = simulated(m, NoiseSpec::nig(5.0), 500, 12);
  for (auto method : {OptimizerMethod::simplex, OptimizerMethod::bfgs}) {
    OptimizerConfig opt;
    opt.method = method;
    opt.restarts = 3;
    RngStream r1(5, 5), r2(5, 5);
    const auto a = fit(obs, m, cauchy(), opt, r1);
    const auto b = fit(obs, m, cauchy(), opt, r2);
    EXPECT_EQ(a.theta_hat.flat(), b.theta_hat.flat());
    EXPECT_EQ(a.loglik, b.loglik);
    EXPECT_EQ(a.n_evals, b.n_evals);
    ASSERT_EQ(a.starts.size(), 3u);
    for (double s : a.start_loglik) EXPECT_GE(a.loglik, s);
    EXPECT_TRUE(m.bounds.contains(a.theta_hat.flat()));
    EXPECT_NEAR(a.loglik, quasi_loglik(obs, m, a.theta_hat, cauchy()), 1e-12 * std::abs(a.loglik));
    EXPECT_TRUE(std::isfinite(a.score_norm));
    EXPECT_EQ(a.restarts_used, 3);
  }
}

TEST(Sqlik, SimplexAndBfgsAgree) {
  const Theta t0{{-1.0}, {1.5}};
  const auto m = with_box(make_builtin_model("trig-1d"), t0);
  const auto obs = simulated(m, NoiseSpec::nig(5.0), 1000, 31);
  OptimizerConfig opt;
  opt.init = InitMode::around;
  opt.init_center = t0;
  opt.init_halfwidth = 1.0;
  opt.restarts = 3;
  RngStream r1(1, 0), r2(1, 0);
  const auto a = fit(obs, m, cauchy(), opt, r1);
  opt.method = OptimizerMethod::bfgs;
  const auto b = fit(obs, m, cauchy(), opt, r2);
  EXPECT_NEAR(a.theta_hat.alpha[0], b.theta_hat.alpha[0], 1e-5);
  EXPECT_NEAR(a.theta_hat.gamma[0], b.theta_hat.gamma[0], 1e-5);
  EXPECT_LT(a.score_norm, 1e-4);
}

TEST(Sqlik, FlatDataDoesNotCrash) {
  const Theta t0{{-1.0}, {1.5}};
  const auto m = with_box(make_builtin_model("trig-1d"), t0);
  const auto obs = ObservationSeries::from_values(std::vector<double>(101, 0.25), 1.0);
  OptimizerConfig opt;
  opt.restarts = 2;
  RngStream rng(0, 0);
  const auto r = fit(obs, m, cauchy(), opt, rng);
  EXPECT_TRUE(std::isfinite(r.loglik));
  EXPECT_TRUE(m.bounds.contains(r.theta_hat.flat()));
}

TEST(Sqlik, AllRestartsBlockedRaisesModelViolation) {
  auto m = make_expression_model("alpha1*x", "gamma1");
  m.bounds = Box{{-1.0, -2.0}, {1.0, -0.5}};
  const auto obs = ObservationSeries::from_values({0.0, 0.1, 0.05}, 1.0);
  OptimizerConfig opt;
  opt.restarts = 2;
  RngStream rng(0, 0);
  EXPECT_THROW(fit(obs, m, cauchy(), opt, rng), ModelViolation);
}

TEST(Sqlik, NormalizedScoreAndRateFactor) {
  EXPECT_EQ(drift_rate_factor(0.01, 1.0), 1.0);
  EXPECT_NEAR(drift_rate_factor(0.001, 1.5), std::pow(0.001, 1.0 / 3.0), 1e-15);
  Eigen::VectorXd s(3);
  s << 2.0, 4.0, 6.0;
  const auto z = normalize_score(s, 400, 0.001, 1.5, 2);
  const double ra = 20.0 * std::pow(0.001, 1.0 / 3.0);
  EXPECT_NEAR(z[0], 2.0 / ra, 1e-12);
  EXPECT_NEAR(z[1], 4.0 / ra, 1e-12);
  EXPECT_NEAR(z[2], 6.0 / 20.0, 1e-15);
}

TEST(Sqlik, EnumNames) {
  EXPECT_EQ(parse_optimizer_method("bfgs"), OptimizerMethod::bfgs);
  EXPECT_EQ(to_string(parse_optimizer_method("simplex")), "simplex");
  EXPECT_EQ(parse_init_mode("around"), InitMode::around);
  EXPECT_THROW(parse_optimizer_method("newton"), UsageError);
  EXPECT_THROW(parse_init_mode("x"), UsageError);
}
