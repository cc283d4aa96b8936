#pragma once

// Standard symmetric beta-stable law S_beta with characteristic function
// exp(-|u|^beta): density, log-derivative scores, and the information
// constants of the stable quasi-likelihood.

#include <memory>
#include <span>
#include <vector>

namespace sqmle {

struct KernelOptions {
  double grid_step = 1e-3;    // table spacing on [0, tail_cutoff]
  double tail_cutoff = 15.0;  // |y| beyond which the tail series is used
  double abs_tol = 1e-10;     // per-point quadrature tolerance
  bool direct = false;        // skip the table; integrate on every call
  bool closed_form_cauchy = true;
};

/// phi_beta and its first two derivatives at one abscissa.
struct StableDerivs {
  double phi = 0.0;
  double dphi = 0.0;
  double ddphi = 0.0;
};

/// Immutable evaluator for phi_beta, g_beta = phi'/phi, k_beta = 1 + y g_beta
/// and dg_beta. Copies share one table, so the kernel is cheap to pass by
/// value and safe to use from many threads.
///
/// For beta = 1 the Cauchy closed forms are used unless
/// closed_form_cauchy is false. Otherwise phi, phi', phi'', phi''' are
/// tabulated on a uniform grid over [0, tail_cutoff] by cosine/sine
/// inversion of exp(-u^beta) and interpolated by cubic Hermite splines;
/// beyond the cutoff the convergent-in-practice asymptotic tail series
/// phi(y) ~ sum_k a_k |y|^{-k beta - 1} (leading term c_beta |y|^{-1-beta})
/// is used, truncated at its smallest term.
class StableKernel {
 public:
  /// Throws DomainError unless beta is in [1, 2).
  explicit StableKernel(double beta, KernelOptions opts = {});

  double beta() const noexcept;
  const KernelOptions& options() const noexcept;
  bool uses_closed_form() const noexcept;

  StableDerivs evaluate(double y) const;
  double density(double y) const;
  double log_density(double y) const;
  double g(double y) const;
  double k(double y) const;
  double dg(double y) const;

  /// Tabulation abscissae (non-negative half; the law is symmetric).
  /// Empty for the closed-form and direct modes.
  std::span<const double> grid() const noexcept;
  std::span<const double> phi_table() const noexcept;
  std::span<const double> dphi_table() const noexcept;
  std::span<const double> ddphi_table() const noexcept;

  /// P(Y > y) for y >= tail_cutoff, from the integrated tail series.
  double upper_tail_mass(double y) const;

  struct Impl;

 private:
  std::shared_ptr<const Impl> impl_;
};

/// Levy density constant c_beta of S_beta: nu(dz) = c_beta |z|^{-1-beta} dz.
/// Evaluated as Gamma(1+beta) sin(pi beta / 2) / pi, which equals
/// (1/2) {(1/beta) Gamma(1-beta) cos(beta pi / 2)}^{-1} and is continuous
/// at beta = 1 (value 1/pi).
double levy_density_constant(double beta);

/// Direct inversion: phi, phi', phi'' at y by adaptive quadrature of
/// (1/pi) int_0^inf u^m e^{-u^beta} {cos, sin}(u y) du.
StableDerivs stable_derivs_by_inversion(double beta, double y, double abs_tol = 1e-10);

struct InfoConstants {
  double c_alpha = 0.0;   // int g^2 phi
  double c_gamma = 0.0;   // int k^2 phi
  double residual = 0.0;  // quadrature error estimate
};

/// C_alpha(beta) and C_gamma(beta). Throws NumericError when the quadrature
/// does not converge.
InfoConstants info_constants(const StableKernel& kernel);

// Free-function spellings.
double stable_density(double y, const StableKernel& kernel);
double stable_g(double y, const StableKernel& kernel);
double stable_k(double y, const StableKernel& kernel);
double stable_dg(double y, const StableKernel& kernel);

}  // namespace sqmle
