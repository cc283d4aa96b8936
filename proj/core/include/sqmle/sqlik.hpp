#pragma once

// Stable quasi-likelihood H_n(theta) of an equidistantly observed SDE, its
// score and Hessian, and the multistart maximizer.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "sqmle/model.hpp"
#include "sqmle/optimizer.hpp"
#include "sqmle/rng.hpp"
#include "sqmle/sde_sim.hpp"
#include "sqmle/stable_core.hpp"

namespace sqmle {

/// Which formula evaluates H_n. `automatic` takes the explicit Cauchy
/// form when beta = 1 and the kernel path otherwise.
enum class LikPath { automatic, general, cauchy_explicit };

/// h^{1 - 1/beta}; exactly 1 for beta = 1.
double drift_rate_factor(double h, double beta);

/// Euler residuals eps_j = (X_j - X_{j-1} - h a_{j-1}) / (h^{1/beta} c_{j-1}).
/// Throws ModelViolation when some c_{j-1} <= 0 and DomainError when theta
/// lies outside non-empty model bounds.
std::vector<double> residuals(const ObservationSeries& obs, const ModelSpec& model, const Theta& theta,
                              double beta);

double quasi_loglik(const ObservationSeries& obs, const ModelSpec& model, const Theta& theta,
                    const StableKernel& kernel, LikPath path = LikPath::automatic);

/// Gradient in flat (alpha, gamma) order.
Eigen::VectorXd quasi_score(const ObservationSeries& obs, const ModelSpec& model, const Theta& theta,
                            const StableKernel& kernel);

/// Symmetric Hessian in flat (alpha, gamma) order.
Eigen::MatrixXd quasi_hessian(const ObservationSeries& obs, const ModelSpec& model, const Theta& theta,
                              const StableKernel& kernel);

/// D_n^{-1} applied to a flat vector: alpha entries divided by
/// sqrt(n) h^{1-1/beta}, gamma entries by sqrt(n).
Eigen::VectorXd normalize_score(const Eigen::VectorXd& score, std::size_t n, double h, double beta,
                                int p_alpha);

enum class OptimizerMethod { simplex, bfgs };
enum class InitMode { box, around };

OptimizerMethod parse_optimizer_method(const std::string& name);
std::string to_string(OptimizerMethod m);
InitMode parse_init_mode(const std::string& name);
std::string to_string(InitMode m);

struct OptimizerConfig {
  OptimizerMethod method = OptimizerMethod::simplex;
  int restarts = 10;
  int max_iter = 2000;
  double xtol = 1e-8;
  /// box: uniform over the bounds. around: uniform on init_center +/-
  /// init_halfwidth, clamped to the bounds.
  InitMode init = InitMode::box;
  double init_halfwidth = 10.0;
  std::optional<Theta> init_center;
};

struct FitResult {
  Theta theta_hat;
  double loglik = 0.0;
  long n_evals = 0;
  bool converged = false;
  int restarts_used = 0;
  double score_norm = 0.0;
  /// Winning restart (0-based).
  int best_restart = 0;
  std::vector<Theta> starts;
  std::vector<double> start_loglik;
};

/// Best local maximizer of H_n over the restarts. Initial points are drawn
/// from rng before any optimization, so the result depends only on
/// (obs, model, kernel, opt, rng state). Throws OptimizationError when no
/// restart reaches a finite value, or ModelViolation when every restart
/// was blocked by a non-positive scale.
FitResult fit(const ObservationSeries& obs, const ModelSpec& model, const StableKernel& kernel,
              const OptimizerConfig& opt, RngStream& rng);

}  // namespace sqmle
