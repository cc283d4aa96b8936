#pragma once

// Euler simulation of dX = a(X, alpha) dt + c(X-, gamma) dJ on a fine grid,
// thinning to the observation grid, and the observation CSV format.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "sqmle/levy_samplers.hpp"
#include "sqmle/model.hpp"
#include "sqmle/rng.hpp"

namespace sqmle {

/// Equidistant record X_{t_0}, ..., X_{t_n} with t_j = j h and h n = T.
struct ObservationSeries {
  std::vector<double> x;
  double h = 0.0;
  double T = 0.0;

  std::size_t n() const { return x.empty() ? 0 : x.size() - 1; }
  /// Builds a series with h = T / n. Throws UsageError on bad input.
  static ObservationSeries from_values(std::vector<double> x, double T);
  void validate() const;
};

struct FinePath {
  std::vector<double> x;  // n_fine + 1 values
  double dt = 0.0;
  double T = 0.0;
  std::size_t n_fine() const { return x.empty() ? 0 : x.size() - 1; }
};

/// Euler recursion driven by given increments dJ (length n_fine):
/// X_{k+1} = X_k + a(X_k, alpha) dt + c(X_k, gamma) dJ_k.
/// Throws NumericError naming the first step whose state is non-finite.
FinePath euler_path(const ModelSpec& model, const Theta& theta, double T, double x0,
                    std::span<const double> dJ);

/// Simulates at theta_true with increments drawn from the noise at step
/// T / n_fine.
FinePath simulate_fine(const ModelSpec& model, const NoiseSpec& noise, double T, std::size_t n_fine,
                       double x0, RngStream& rng);

/// Every factor-th point. Throws UsageError unless factor divides n_fine.
ObservationSeries thin(const FinePath& path, std::size_t factor);

/// CSV with header "t,x"; times are j h.
void write_observations_csv(const ObservationSeries& obs, std::ostream& os);
/// Reads "t,x" CSV; requires at least two rows and equidistant times.
ObservationSeries read_observations_csv(std::istream& is);

}  // namespace sqmle
