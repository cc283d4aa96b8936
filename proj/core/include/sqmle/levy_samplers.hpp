#pragma once

// Increment samplers for the driving Levy processes: symmetric beta-stable
// and symmetric normal-inverse-Gaussian NIG(eta, 0, dt, 0).

#include <cstddef>
#include <string>
#include <vector>

#include "sqmle/rng.hpp"

namespace sqmle {

enum class NoiseKind { stable, nig };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::stable;
  double beta = 1.5;  // stable kind
  double eta = 5.0;   // nig kind

  static NoiseSpec stable(double beta) { return {NoiseKind::stable, beta, 0.0}; }
  static NoiseSpec nig(double eta) { return {NoiseKind::nig, 1.0, eta}; }

  /// Throws DomainError on out-of-range parameters.
  void validate() const;
  std::string describe() const;
};

NoiseKind parse_noise_kind(const std::string& name);
std::string to_string(NoiseKind kind);

/// Chambers-Mallows-Stuck transform for the symmetric case: a standard
/// S_beta variate from an angle v in (-pi/2, pi/2) and w ~ Exp(1).
double stable_from_uniforms(double beta, double v, double w);

/// i.i.d. increments with characteristic function exp(-dt |u|^beta).
std::vector<double> sample_stable(double beta, double dt, std::size_t count, RngStream& rng);

/// Inverse-Gaussian draws parametrized by mean and shape
/// (variance mean^3 / shape), Michael-Schucany-Haas method.
std::vector<double> sample_inverse_gaussian(double mean, double shape, std::size_t count,
                                            RngStream& rng);
double draw_inverse_gaussian(double mean, double shape, RngStream& rng);

/// i.i.d. NIG(eta, 0, dt, 0) increments: sqrt(Z) N with Z ~ IG(dt/eta, dt^2).
std::vector<double> sample_nig(double eta, double dt, std::size_t count, RngStream& rng);

/// Dispatch on the noise kind.
std::vector<double> sample_increments(const NoiseSpec& noise, double dt, std::size_t count,
                                      RngStream& rng);

}  // namespace sqmle
