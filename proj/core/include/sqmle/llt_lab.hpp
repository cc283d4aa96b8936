#pragma once

// Small-time local limit checks: densities f_h of h^{-1/beta} J_h by
// characteristic-function inversion, their L1 distance to phi_beta, and
// log-log rate fits of that distance in h.

#include <string>
#include <vector>

#include "sqmle/stable_core.hpp"

namespace sqmle {

enum class CfKind { stable, tempered_stable, gh_nig };

CfKind parse_cf_kind(const std::string& name);
std::string to_string(CfKind kind);

/// Symmetric driver J with psi_h(u) = log E exp(i u h^{-1/beta} J_h).
///   stable           psi_h(u) = -u^beta
///   tempered_stable  Levy density c_beta |z|^{-1-beta} e^{-lambda |z|}, beta in [1, 2)
///   gh_nig           symmetric GH(gh_lambda, eta, delta = 1), locally Cauchy (beta = 1);
///                    gh_lambda = -1/2 is NIG
struct CfModel {
  CfKind kind = CfKind::stable;
  double beta = 1.5;
  double lambda_tempering = 1.0;
  double gh_lambda = -0.5;
  double gh_eta = 5.0;

  static CfModel stable(double beta);
  static CfModel tempered_stable(double beta, double lambda);
  static CfModel gh(double lambda, double eta);
  static CfModel nig(double eta) { return gh(-0.5, eta); }

  /// Throws DomainError on invalid parameters.
  void validate() const;
  std::string describe() const;

  /// psi_h(u) from the closed forms, u >= 0, h > 0.
  double exponent(double u, double h) const;
  /// h psi_1(h^{-1/beta} u) built from the unit-time exponent.
  double exponent_generic(double u, double h) const;
  /// d psi_h / du; for gh kinds uses the Bessel ratio K_{lambda+1}/K_lambda.
  double exponent_derivative(double u, double h) const;
};

/// Unit-time exponent of the tempered-stable law by direct quadrature
/// of int (cos(u z) - 1) nu(dz) over the Levy measure.
double tempered_exponent_by_levy_quadrature(double beta, double lambda, double u, double tol = 1e-12);

/// Uniform grid -half_width, ..., half_width with the given spacing.
std::vector<double> symmetric_grid(double half_width = 60.0, double spacing = 1e-2);

struct InvertedDensity {
  std::vector<double> grid;
  std::vector<double> f;
  /// Mass removed by clipping negative values to 0 (trapezoid weights).
  double clip_mass = 0.0;
  /// Number of quadrature nodes in u.
  std::size_t nodes = 0;
};

/// f_h(y) = (1/pi) int_0^inf cos(u y) exp(psi_h(u)) du by composite
/// 10-point Gauss-Legendre panels (geometric near 0, then uniform up to
/// psi_h < -45). The grid must be symmetric about 0.
InvertedDensity invert_density(const CfModel& cf, double h, const std::vector<double>& grid);

/// Trapezoid int |f - phi_beta| over a uniform symmetric grid plus the
/// tail estimate |2 P(S_beta > W) - (1 - trapezoid int f)| beyond the
/// half-width W. Throws UsageError on mismatched or non-uniform grids.
double l1_distance(const std::vector<double>& grid, const std::vector<double>& f, const StableKernel& kernel);

struct RateFitOptions {
  double half_width = 60.0;
  double spacing = 1e-2;
  /// Distances below this are treated as zero and excluded.
  double noise_floor = 1e-8;
  /// Largest h values are dropped while |quadratic coefficient| exceeds
  /// this and more than four points remain.
  double curvature_limit = 0.1;
  int workers = 1;
};

struct RateFit {
  std::vector<double> h_values;   // strictly decreasing
  std::vector<double> l1_values;
  std::vector<bool> used;
  double slope = 0.0;             // NaN when fewer than two points are usable
  double intercept = 0.0;
  double quadratic = 0.0;         // curvature of the final log-log fit
  std::vector<std::string> warnings;
};

/// Computes l1 at every h and fits log l1 = intercept + slope log h.
/// Needs at least four distinct h values spanning two decades.
RateFit rate_fit(const CfModel& cf, const StableKernel& kernel, std::vector<double> h_values,
                 const RateFitOptions& opts = {});

/// count values from hi down to lo, equally spaced in log.
std::vector<double> log_spaced(double hi, double lo, int count);

}  // namespace sqmle
