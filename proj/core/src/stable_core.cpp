#include "sqmle/stable_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "sqmle/errors.hpp"
#include "sqmle/quadrature.hpp"

namespace sqmle {

namespace {

constexpr double kPi = std::numbers::pi;

// e^{-u^beta} < e^{-40} beyond this point.
double inversion_upper_limit(double beta) { return std::pow(40.0, 1.0 / beta); }

// phi, phi', phi'', phi''' by inversion. Odd derivatives are sine transforms.
std::array<double, 4> invert4(double beta, double y, double abs_tol) {
  const double umax = inversion_upper_limit(beta);
  auto f = [beta, y](double u) {
    const double e = std::exp(-std::pow(u, beta)) / kPi;
    const double c = std::cos(u * y);
    const double s = std::sin(u * y);
    return std::array<double, 4>{e * c, -e * u * s, -e * u * u * c, e * u * u * u * s};
  };
  // Seed with half-periods of the oscillation and a short first panel for the
  // u^beta kink at the origin.
  const int pieces = std::clamp(static_cast<int>(std::ceil(umax * std::abs(y) / kPi)), 4, 256);
  std::vector<double> br;
  br.reserve(pieces + 2);
  br.push_back(0.0);
  br.push_back(std::min(0.05, umax / pieces / 2));
  for (int i = 1; i <= pieces; ++i) br.push_back(umax * i / pieces);
  return quad::integrate<4>(f, br, abs_tol, 20000).value;
}

struct TailSeries {
  std::vector<double> coef;  // a_k
  std::vector<double> expo;  // k beta + 1
};

// phi(y) ~ (1/pi) sum_k (-1)^{k+1} Gamma(k beta + 1)/k! sin(k pi beta/2) y^{-k beta - 1}
TailSeries build_tail_series(double beta, double cutoff) {
  TailSeries ts;
  double prev = INFINITY;
  for (int k = 1; k <= 80; ++k) {
    const double logmag = std::lgamma(k * beta + 1.0) - std::lgamma(k + 1.0);
    const double sgn = (k % 2 == 1) ? 1.0 : -1.0;
    const double a = sgn * std::exp(logmag) * std::sin(k * kPi * beta / 2.0) / kPi;
    const double p = k * beta + 1.0;
    const double bound = std::exp(logmag) / kPi * std::pow(cutoff, -p);
    if (bound > prev) break;  // asymptotic series: stop at the smallest term
    prev = bound;
    ts.coef.push_back(a);
    ts.expo.push_back(p);
    if (bound < 1e-18 * ts.coef.front() * std::pow(cutoff, -ts.expo.front())) break;
  }
  return ts;
}

}  // namespace

struct StableKernel::Impl {
  double beta = 1.0;
  KernelOptions opts;
  bool closed_form = false;
  double step = 0.0;
  std::vector<double> grid;
  std::vector<double> f0, f1, f2, f3;  // phi and its first three derivatives
  TailSeries tail;

  StableDerivs tail_eval(double ay) const {
    StableDerivs d;
    for (std::size_t i = 0; i < tail.coef.size(); ++i) {
      const double p = tail.expo[i];
      const double t = tail.coef[i] * std::pow(ay, -p);
      d.phi += t;
      d.dphi -= p * t / ay;
      d.ddphi += p * (p + 1.0) * t / (ay * ay);
    }
    return d;
  }

  StableDerivs table_eval(double ay) const {
    const double s = ay / step;
    std::size_t i = static_cast<std::size_t>(s);
    if (i >= grid.size() - 1) i = grid.size() - 2;
    const double t = s - static_cast<double>(i);
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    auto herm = [&](const std::vector<double>& v, const std::vector<double>& dv) {
      return h00 * v[i] + h10 * step * dv[i] + h01 * v[i + 1] + h11 * step * dv[i + 1];
    };
    return {herm(f0, f1), herm(f1, f2), herm(f2, f3)};
  }

  // Derivatives at |y|; the caller fixes the sign of the odd one.
  StableDerivs eval_abs(double ay) const {
    if (closed_form) {
      const double q = 1.0 + ay * ay;
      return {1.0 / (kPi * q), -2.0 * ay / (kPi * q * q), (6.0 * ay * ay - 2.0) / (kPi * q * q * q)};
    }
    if (ay > opts.tail_cutoff) return tail_eval(ay);
    if (opts.direct) {
      const auto v = invert4(beta, ay, opts.abs_tol);
      return {v[0], v[1], v[2]};
    }
    return table_eval(ay);
  }
};

StableKernel::StableKernel(double beta, KernelOptions opts) {
  if (!(beta >= 1.0 && beta < 2.0)) {
    throw DomainError("stable kernel: beta must lie in [1, 2), got " + std::to_string(beta));
  }
  if (!(opts.grid_step > 0.0) || !(opts.tail_cutoff > 1.0) || !(opts.abs_tol > 0.0)) {
    throw UsageError("stable kernel: grid_step, abs_tol must be positive and tail_cutoff > 1");
  }
  auto impl = std::make_shared<Impl>();
  impl->beta = beta;
  impl->opts = opts;
  impl->closed_form = (beta == 1.0 && opts.closed_form_cauchy);
  if (!impl->closed_form) {
    impl->tail = build_tail_series(beta, opts.tail_cutoff);
    if (!opts.direct) {
      const auto n = static_cast<std::size_t>(std::ceil(opts.tail_cutoff / opts.grid_step));
      impl->step = opts.tail_cutoff / static_cast<double>(n);
      impl->grid.resize(n + 1);
      impl->f0.resize(n + 1);
      impl->f1.resize(n + 1);
      impl->f2.resize(n + 1);
      impl->f3.resize(n + 1);
      for (std::size_t i = 0; i <= n; ++i) {
        const double y = impl->step * static_cast<double>(i);
        const auto v = invert4(beta, y, opts.abs_tol);
        impl->grid[i] = y;
        impl->f0[i] = v[0];
        impl->f1[i] = v[1];
        impl->f2[i] = v[2];
        impl->f3[i] = v[3];
        if (!(v[0] > 0.0)) {
          throw NumericError("stable kernel: non-positive tabulated density at y=" + std::to_string(y), v[0]);
        }
      }
    }
  }
  impl_ = std::move(impl);
}

double StableKernel::beta() const noexcept { return impl_->beta; }
const KernelOptions& StableKernel::options() const noexcept { return impl_->opts; }
bool StableKernel::uses_closed_form() const noexcept { return impl_->closed_form; }

StableDerivs StableKernel::evaluate(double y) const {
  if (!std::isfinite(y)) throw DomainError("stable kernel: non-finite argument");
  StableDerivs d = impl_->eval_abs(std::abs(y));
  if (y < 0) d.dphi = -d.dphi;
  return d;
}

double StableKernel::density(double y) const { return evaluate(y).phi; }

double StableKernel::log_density(double y) const {
  if (impl_->closed_form) {
    if (!std::isfinite(y)) throw DomainError("stable kernel: non-finite argument");
    return -std::log(kPi) - std::log1p(y * y);
  }
  return std::log(density(y));
}

double StableKernel::g(double y) const {
  const auto d = evaluate(y);
  return d.dphi / d.phi;
}

double StableKernel::k(double y) const { return 1.0 + y * g(y); }

double StableKernel::dg(double y) const {
  const auto d = evaluate(y);
  const double r = d.dphi / d.phi;
  return d.ddphi / d.phi - r * r;
}

std::span<const double> StableKernel::grid() const noexcept { return impl_->grid; }
std::span<const double> StableKernel::phi_table() const noexcept { return impl_->f0; }
std::span<const double> StableKernel::dphi_table() const noexcept { return impl_->f1; }
std::span<const double> StableKernel::ddphi_table() const noexcept { return impl_->f2; }

double StableKernel::upper_tail_mass(double y) const {
  if (!(y >= impl_->opts.tail_cutoff) && !impl_->closed_form) {
    throw DomainError("upper_tail_mass: argument below the tail cutoff");
  }
  if (impl_->closed_form) return 0.5 - std::atan(y) / kPi;
  double m = 0.0;
  for (std::size_t i = 0; i < impl_->tail.coef.size(); ++i) {
    const double kb = impl_->tail.expo[i] - 1.0;
    m += impl_->tail.coef[i] * std::pow(y, -kb) / kb;
  }
  return m;
}

double levy_density_constant(double beta) {
  if (!(beta > 0.0 && beta < 2.0)) throw DomainError("levy_density_constant: beta must lie in (0, 2)");
  return std::tgamma(1.0 + beta) * std::sin(kPi * beta / 2.0) / kPi;
}

StableDerivs stable_derivs_by_inversion(double beta, double y, double abs_tol) {
  if (!(beta > 0.0 && beta <= 2.0)) throw DomainError("stable inversion: beta must lie in (0, 2]");
  if (!std::isfinite(y)) throw DomainError("stable inversion: non-finite argument");
  const auto v = invert4(beta, y, abs_tol);
  return {v[0], v[1], v[2]};
}

InfoConstants info_constants(const StableKernel& kernel) {
  // Integrands are even; integrate over [0, inf) and double.
  auto integrand = [&kernel](double y) {
    const auto d = kernel.evaluate(y);
    const double g = d.dphi / d.phi;
    const double k = 1.0 + y * g;
    return std::array<double, 2>{g * g * d.phi, k * k * d.phi};
  };
  const double cut = kernel.uses_closed_form() ? 15.0 : kernel.options().tail_cutoff;
  std::vector<double> br;
  for (double y = 0.0; y < cut; y += 0.5) br.push_back(y);
  br.push_back(cut);
  const double tol = 1e-11;
  const auto inner = quad::integrate<2>(integrand, br, tol, 20000);
  const auto outer = quad::integrate_to_infinity<2>(integrand, cut, tol, 20000);
  InfoConstants c;
  c.c_alpha = 2.0 * (inner.value[0] + outer.value[0]);
  c.c_gamma = 2.0 * (inner.value[1] + outer.value[1]);
  c.residual = 2.0 * (inner.error + outer.error);
  if (!(c.c_alpha > 0.0 && c.c_gamma > 0.0 && std::isfinite(c.c_alpha) && std::isfinite(c.c_gamma))) {
    throw NumericError("info_constants: non-positive or non-finite result", c.residual);
  }
  return c;
}

double stable_density(double y, const StableKernel& kernel) { return kernel.density(y); }
double stable_g(double y, const StableKernel& kernel) { return kernel.g(y); }
double stable_k(double y, const StableKernel& kernel) { return kernel.k(y); }
double stable_dg(double y, const StableKernel& kernel) { return kernel.dg(y); }

}  // namespace sqmle
