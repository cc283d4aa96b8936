#pragma once

// Rate normalization, empirical information matrices, Studentized
// statistics and confidence intervals for the quasi-likelihood estimator.

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "sqmle/model.hpp"
#include "sqmle/sde_sim.hpp"
#include "sqmle/stable_core.hpp"

namespace sqmle {

/// sqrt(n) h^{1-1/beta}.
double rate_alpha(std::size_t n, double h, double beta);
/// T^{1-1/beta} n^{(2-beta)/(2 beta)}; equal to rate_alpha(n, T/n, beta).
double rate_alpha_closed_form(std::size_t n, double T, double beta);
/// sqrt(n).
double rate_gamma(std::size_t n);

struct SigmaHats {
  Eigen::MatrixXd alpha;  // (1/n) sum (d_alpha a)^{(x)2} / c^2
  Eigen::MatrixXd gamma;  // (1/n) sum (d_gamma c)^{(x)2} / c^2
  bool alpha_singular = false;
  bool gamma_singular = false;
};

/// Throws ModelViolation when c <= 0 at some observation.
SigmaHats sigma_hats(const ObservationSeries& obs, const ModelSpec& model, const Theta& theta_hat);

/// Symmetric PSD square root by eigendecomposition. Eigenvalues below
/// 1e-12 of the largest are clipped to that floor.
struct SymSqrt {
  Eigen::MatrixXd root;
  bool clipped = false;
  /// Largest eigenvalue <= 0, or smallest <= 1e-14 of the largest.
  bool singular = false;
};
SymSqrt sym_sqrt(const Eigen::MatrixXd& m);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double v) const { return lower <= v && v <= upper; }
};

struct StudentizedReport {
  Eigen::VectorXd z_alpha;
  Eigen::VectorXd z_gamma;
  Eigen::MatrixXd sigma_hat_alpha;
  Eigen::MatrixXd sigma_hat_gamma;
  double rate_alpha = 0.0;
  double rate_gamma = 0.0;
  double c_alpha = 0.0;
  double c_gamma = 0.0;
  double level = 0.95;
  /// Flat (alpha, gamma) order.
  std::vector<Interval> ci;
  bool clipped_alpha = false;
  bool clipped_gamma = false;
  /// A singular block leaves its z entries and intervals NaN.
  bool singular_alpha = false;
  bool singular_gamma = false;

  bool available() const { return !singular_alpha && !singular_gamma; }
};

/// z_alpha = (C_alpha Sigma_alpha)^{1/2} sqrt(n) h^{1-1/beta} (alpha_hat - alpha_ref),
/// z_gamma = (C_gamma Sigma_gamma)^{1/2} sqrt(n) (gamma_hat - gamma_ref);
/// intervals theta_hat_k +/- q sqrt([(C Sigma)^{-1}]_kk) / rate.
StudentizedReport studentize(const ObservationSeries& obs, const ModelSpec& model, const Theta& theta_hat,
                             const Theta& theta_ref, double beta, const InfoConstants& constants,
                             double level = 0.95);
/// Computes the information constants from the kernel.
StudentizedReport studentize(const ObservationSeries& obs, const ModelSpec& model, const Theta& theta_hat,
                             const Theta& theta_ref, const StableKernel& kernel, double level = 0.95);

/// Observed information -D_n^{-1} (d^2 H_n) D_n^{-1} at theta_hat.
Eigen::MatrixXd observed_information(const ObservationSeries& obs, const ModelSpec& model,
                                     const Theta& theta_hat, const StableKernel& kernel);

/// Two-sided standard normal quantile for the given coverage level.
double normal_quantile_two_sided(double level);

}  // namespace sqmle
