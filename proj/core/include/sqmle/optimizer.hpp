#pragma once

// Box-constrained local maximizers used by the quasi-likelihood fit.

#include <functional>
#include <span>
#include <vector>

#include "sqmle/model.hpp"

namespace sqmle {

using Objective = std::function<double(std::span<const double>)>;
using Gradient = std::function<std::vector<double>(std::span<const double>)>;

struct LocalOptions {
  int max_iter = 2000;
  double xtol = 1e-8;          // simplex diameter < xtol (1 + |x|)
  double initial_step = 0.1;   // fraction of the box width per coordinate
};

struct LocalResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  long evaluations = 0;
  bool converged = false;
};

/// Nelder-Mead maximization inside a closed box. Vertices proposed outside
/// the box are clamped onto it. Non-finite objective values rank last.
LocalResult nelder_mead_maximize(const Objective& f, std::vector<double> x0, const Box& box,
                                 const LocalOptions& opts);

/// Projected BFGS maximization with Armijo backtracking. The gradient is
/// projected onto the feasible directions at active bounds.
LocalResult projected_bfgs_maximize(const Objective& f, const Gradient& grad, std::vector<double> x0,
                                    const Box& box, const LocalOptions& opts);

}  // namespace sqmle
