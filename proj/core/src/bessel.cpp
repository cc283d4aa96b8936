#include "sqmle/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sqmle/errors.hpp"

namespace sqmle {

namespace {

double log_k_integral(double nu, double z) {
  // Integrand exponent -z (cosh t - 1) + |nu| t; integrate until it sits
  // 50 below its maximum on the decreasing side.
  const double anu = std::abs(nu);
  auto expo = [&](double t) { return -z * (std::cosh(t) - 1.0) + anu * t; };
  double peak = 0.0;
  double tmax = 0.0;
  for (;;) {
    tmax += 0.25;
    const double e = expo(tmax);
    peak = std::max(peak, e);
    if (e < peak - 50.0) break;
  }
  const double dt = std::min(0.02, 0.3 / std::sqrt(z));
  const int m = static_cast<int>(std::ceil(tmax / dt));
  for (int i = 0; i <= m; ++i) peak = std::max(peak, expo(i * dt));
  double s = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double t = i * dt;
    const double e = -z * (std::cosh(t) - 1.0) - peak;
    // cosh(nu t) = (e^{nu t} + e^{-nu t}) / 2
    const double w = 0.5 * (std::exp(e + anu * t) + std::exp(e - anu * t));
    s += (i == 0 ? 0.5 : 1.0) * w;
  }
  return std::log(s * dt) + peak - z;
}

double log_k_asymptotic(double nu, double z) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  double prev = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (8.0 * k * z);
    if (term == 0.0) break;
    if (std::abs(term) > std::abs(prev)) break;
    sum += term;
    prev = term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return 0.5 * std::log(std::numbers::pi / (2.0 * z)) - z + std::log(sum);
}

// K_{mu+1}/K_mu for |mu| <= 1/2 and z >= 2 (Steed's CF2).
double ratio_cf2(double mu, double z) {
  double b = 2.0 * (1.0 + z);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25 - mu * mu;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 1; i < 10000; ++i) {
    a -= 2.0 * i;
    c = -a * c / (i + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < 1e-16) {
      h *= a1;
      return (mu + z + 0.5 - h) / z;
    }
  }
  throw NumericError("bessel_k_ratio: continued fraction did not converge");
}

}  // namespace

double log_bessel_k(double nu, double z) {
  if (!(z > 0.0) || !std::isfinite(z)) throw DomainError("log_bessel_k: argument must be positive and finite");
  if (!std::isfinite(nu)) throw DomainError("log_bessel_k: order must be finite");
  if (z > 30.0 && nu * nu < z) return log_k_asymptotic(nu, z);
  return log_k_integral(nu, z);
}

double bessel_k_ratio(double nu, double z) {
  if (!(z > 0.0) || !std::isfinite(z)) throw DomainError("bessel_k_ratio: argument must be positive and finite");
  if (nu < -0.5) return 1.0 / bessel_k_ratio(-nu - 1.0, z);
  const double shift = std::floor(nu + 0.5);
  const double mu = nu - shift;  // in [-1/2, 1/2)
  double r = z >= 2.0 ? ratio_cf2(mu, z) : std::exp(log_k_integral(mu + 1.0, z) - log_k_integral(mu, z));
  // r_{m+1} = 1 / r_m + 2 (m + 1) / z
  for (double m = mu; m < nu - 0.25; m += 1.0) r = 1.0 / r + 2.0 * (m + 1.0) / z;
  return r;
}

}  // namespace sqmle
