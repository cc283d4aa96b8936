#pragma once

// Modified Bessel function of the third kind K_nu(z) for real order and
// z > 0, in the forms needed by the generalized hyperbolic exponent.

namespace sqmle {

/// log K_nu(z). Scaled integral representation
/// e^z K_nu(z) = int_0^inf exp(-z (cosh t - 1)) cosh(nu t) dt, or the
/// Hankel asymptotic series when z > 30 and nu^2 < z. Throws DomainError
/// for z <= 0.
double log_bessel_k(double nu, double z);

/// K_{nu+1}(z) / K_nu(z): Steed's continued fraction for z >= 2 at the
/// reduced order in [-1/2, 1/2), integral representation below, then
/// upward recurrence; negative orders through K_{-nu} = K_nu.
double bessel_k_ratio(double nu, double z);

}  // namespace sqmle
