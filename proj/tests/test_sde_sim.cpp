#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sqmle/errors.hpp"
#include "sqmle/sde_sim.hpp"

using namespace sqmle;

namespace {

ModelSpec trig2d() {
  auto m = make_builtin_model("trig-2d");
  m.bounds = Box{{-10, -10, -10, -10}, {10, 10, 10, 10}};
  m.theta_true = Theta{{-1.0, 1.0}, {1.5, 0.5}};
  return m;
}

ModelSpec driftless_unit() {
  auto m = make_expression_model("0*alpha1", "1 + 0*gamma1", 1, 1);
  m.bounds = Box{{-1, -1}, {1, 1}};
  m.theta_true = Theta{{0.0}, {0.0}};
  return m;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST(SdeSim, ZeroNoiseGivesEulerOdeIterates) {
  auto m = make_builtin_model("ou-const");
  const Theta th{{-1.0}, {1.0}};
  const std::size_t n = 50;
  const double T = 2.0, dt = T / n;
  const std::vector<double> dJ(n, 0.0);
  const auto p = euler_path(m, th, T, 1.0, dJ);
  ASSERT_EQ(p.x.size(), n + 1);
  for (std::size_t k = 0; k <= n; ++k) EXPECT_NEAR(p.x[k], std::pow(1 - dt, static_cast<double>(k)), 1e-14);
  EXPECT_DOUBLE_EQ(p.dt, dt);
}

TEST(SdeSim, DriftlessUnitScaleTelescopes) {
  const auto m = driftless_unit();
  RngStream rng(11, 0);
  const auto dJ = sample_increments(NoiseSpec::nig(5.0), 0.01, 200, rng);
  const auto p = euler_path(m, *m.theta_true, 2.0, 0.3, dJ);
  double s = 0;
  for (double d : dJ) s += d;
  EXPECT_NEAR(p.x.back() - 0.3, s, 1e-12);

  // Simulated terminal values follow the law of J_T (here Cauchy, T = 1).
  std::vector<double> terminal;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    RngStream r(seed, 1);
    terminal.push_back(simulate_fine(m, NoiseSpec::stable(1.0), 1.0, 20, 0.0, r).x.back());
  }
  EXPECT_NEAR(median(terminal), 0.0, 0.2);
  std::vector<double> abs_t;
  for (double v : terminal) abs_t.push_back(std::abs(v));
  EXPECT_NEAR(median(abs_t), 1.0, 0.2);  // |Cauchy| has median 1
}

TEST(SdeSim, TwoDimensionalTrigModelStaysFinite) {
  const auto m = trig2d();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RngStream rng(seed, 7);
    const auto p = simulate_fine(m, NoiseSpec::nig(5.0), 1.0, 150000, 0.0, rng);
    ASSERT_EQ(p.x.size(), 150001u);
    ASSERT_TRUE(std::all_of(p.x.begin(), p.x.end(), [](double v) { return std::isfinite(v); })) << seed;
  }
}

TEST(SdeSim, ThinningDesigns) {
  const auto m = trig2d();
  RngStream rng(3, 0);
  const auto p = simulate_fine(m, NoiseSpec::nig(5.0), 1.0, 150000, 0.0, rng);
  const auto id = thin(p, 1);
  EXPECT_EQ(id.x, p.x);
  EXPECT_EQ(id.n(), 150000u);
  const auto o50 = thin(p, 50);
  EXPECT_EQ(o50.n(), 3000u);
  EXPECT_NEAR(o50.h * static_cast<double>(o50.n()), 1.0, 1e-12);
  EXPECT_EQ(o50.x[7], p.x[350]);
  const auto o300 = thin(p, 300);
  EXPECT_EQ(o300.n(), 500u);
  EXPECT_NEAR(o300.h, 300.0 / 150000.0, 1e-15);
  EXPECT_NEAR(o300.h * static_cast<double>(o300.n()), o300.T, 1e-12);
  EXPECT_THROW(thin(p, 7), UsageError);
  EXPECT_THROW(thin(p, 0), UsageError);
}

TEST(SdeSim, OverflowNamesStep) {
  auto m = make_builtin_model("ou-const");
  const Theta th{{50.0}, {1.0}};
  std::vector<double> dJ(1000, 0.0);
  try {
    euler_path(m, th, 100.0, 1.0, dJ);
    FAIL() << "no overflow";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos) << e.what();
  }
}

TEST(SdeSim, CsvRoundTrip) {
  const auto m = trig2d();
  RngStream rng(5, 0);
  const auto obs = thin(simulate_fine(m, NoiseSpec::stable(1.5), 5.0, 1000, 0.2, rng), 10);
  std::stringstream ss;
  write_observations_csv(obs, ss);
  EXPECT_EQ(ss.str().substr(0, 4), "t,x\n");
  const auto back = read_observations_csv(ss);
  ASSERT_EQ(back.x.size(), obs.x.size());
  for (std::size_t i = 0; i < obs.x.size(); ++i) EXPECT_EQ(back.x[i], obs.x[i]);
  EXPECT_NEAR(back.h, obs.h, 1e-15);
  EXPECT_NEAR(back.T, obs.T, 1e-12);
}

TEST(SdeSim, CsvRejectsBadInput) {
  std::istringstream uneven("t,x\n0,1\n0.1,2\n0.3,3\n");
  EXPECT_THROW(read_observations_csv(uneven), UsageError);
  std::istringstream single("t,x\n0,1\n");
  EXPECT_THROW(read_observations_csv(single), UsageError);
  std::istringstream header("a,b\n0,1\n1,2\n");
  EXPECT_THROW(read_observations_csv(header), UsageError);
  std::istringstream junk("t,x\n0,1\n1,abc\n");
  EXPECT_THROW(read_observations_csv(junk), UsageError);
  EXPECT_THROW(ObservationSeries::from_values({1.0}, 1.0), UsageError);
  EXPECT_THROW(ObservationSeries::from_values({1.0, NAN}, 1.0), UsageError);
}

TEST(SdeSim, ResolutionConsistency) {
  // Euler paths at n and 2n fine steps driven by the same increments
  // (coarse increments are sums of adjacent fine ones).
  const auto m = trig2d();
  const NoiseSpec noise = NoiseSpec::stable(1.5);
  std::vector<double> medians;
  for (std::size_t n : {50u, 100u, 200u, 400u, 800u}) {
    std::vector<double> diffs;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      RngStream rng(seed, 99);
      const auto fine = sample_increments(noise, 1.0 / static_cast<double>(2 * n), 2 * n, rng);
      std::vector<double> coarse(n);
      for (std::size_t k = 0; k < n; ++k) coarse[k] = fine[2 * k] + fine[2 * k + 1];
      const double a = euler_path(m, *m.theta_true, 1.0, 0.0, fine).x.back();
      const double b = euler_path(m, *m.theta_true, 1.0, 0.0, coarse).x.back();
      diffs.push_back(std::abs(a - b));
    }
    medians.push_back(median(diffs));
  }
  for (std::size_t i = 1; i < medians.size(); ++i) EXPECT_LT(medians[i], medians[i - 1]) << i;
}
