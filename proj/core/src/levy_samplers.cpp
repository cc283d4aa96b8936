#include "sqmle/levy_samplers.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "sqmle/errors.hpp"

namespace sqmle {

namespace {
constexpr double kHalfPi = std::numbers::pi / 2.0;

void require_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("sampler: dt must be positive and finite");
}
}  // namespace

void NoiseSpec::validate() const {
  switch (kind) {
    case NoiseKind::stable:
      if (!(beta > 0.0 && beta < 2.0)) throw DomainError("noise: stable beta must lie in (0, 2)");
      break;
    case NoiseKind::nig:
      if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("noise: nig eta must be positive");
      break;
  }
}

std::string NoiseSpec::describe() const {
  std::ostringstream os;
  if (kind == NoiseKind::stable) {
    os << "stable(beta=" << beta << ")";
  } else {
    os << "nig(eta=" << eta << ")";
  }
  return os.str();
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "stable") return NoiseKind::stable;
  if (name == "nig") return NoiseKind::nig;
  throw UsageError("unknown noise kind '" + name + "' (expected stable or nig)");
}

std::string to_string(NoiseKind kind) { return kind == NoiseKind::stable ? "stable" : "nig"; }

double stable_from_uniforms(double beta, double v, double w) {
  if (beta == 1.0) return std::tan(v);
  const double cv = std::cos(v);
  return std::sin(beta * v) / std::pow(cv, 1.0 / beta) *
         std::pow(std::cos((1.0 - beta) * v) / w, (1.0 - beta) / beta);
}

std::vector<double> sample_stable(double beta, double dt, std::size_t count, RngStream& rng) {
  NoiseSpec::stable(beta).validate();
  require_dt(dt);
  const double scale = std::pow(dt, 1.0 / beta);
  std::vector<double> out(count);
  for (auto& x : out) {
    const double v = kHalfPi * (2.0 * rng.uniform() - 1.0);
    const double w = beta == 1.0 ? 1.0 : rng.exponential();
    x = scale * stable_from_uniforms(beta, v, w);
  }
  return out;
}

double draw_inverse_gaussian(double mean, double shape, RngStream& rng) {
  const double nu = rng.normal();
  const double y = nu * nu;
  // x = mean * r / (1 + sqrt(1 + r))^2 with r = 4 shape / (mean y): the
  // cancellation-free form of mean + mean^2 y/(2 shape) - ...
  double x = mean;
  if (y > 0.0) {
    const double r = 4.0 * shape / (mean * y);
    if (std::isfinite(r)) {
      const double s = 1.0 + std::sqrt(1.0 + r);
      x = mean * (r / s) / s;
    }
  }
  if (!(x > 0.0)) x = std::numeric_limits<double>::min();
  if (rng.uniform() * (mean + x) <= mean) return x;
  return mean * (mean / x);
}

std::vector<double> sample_inverse_gaussian(double mean, double shape, std::size_t count,
                                            RngStream& rng) {
  if (!(mean > 0.0) || !(shape > 0.0) || !std::isfinite(mean) || !std::isfinite(shape)) {
    throw DomainError("inverse Gaussian: mean and shape must be positive");
  }
  std::vector<double> out(count);
  for (auto& x : out) x = draw_inverse_gaussian(mean, shape, rng);
  return out;
}

std::vector<double> sample_nig(double eta, double dt, std::size_t count, RngStream& rng) {
  NoiseSpec::nig(eta).validate();
  require_dt(dt);
  const double mean = dt / eta;
  const double shape = dt * dt;
  std::vector<double> out(count);
  for (auto& x : out) {
    const double z = draw_inverse_gaussian(mean, shape, rng);
    x = std::sqrt(z) * rng.normal();
  }
  return out;
}

std::vector<double> sample_increments(const NoiseSpec& noise, double dt, std::size_t count,
                                      RngStream& rng) {
  noise.validate();
  return noise.kind == NoiseKind::stable ? sample_stable(noise.beta, dt, count, rng)
                                         : sample_nig(noise.eta, dt, count, rng);
}

}  // namespace sqmle
