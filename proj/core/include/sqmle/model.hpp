#pragma once

// Parametric SDE coefficients: drift a(x, alpha) and scale c(x, gamma),
// each with first and second parameter derivatives.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqmle/expression.hpp"

namespace sqmle {

/// A coefficient f(x, p) with p in R^dim.
class Coefficient {
 public:
  virtual ~Coefficient() = default;
  virtual int dim() const = 0;
  virtual double value(double x, std::span<const double> p) const = 0;
  /// out has length dim().
  virtual void gradient(double x, std::span<const double> p, std::span<double> out) const = 0;
  /// Row-major dim() x dim().
  virtual void hessian(double x, std::span<const double> p, std::span<double> out) const = 0;
  virtual std::string describe() const = 0;
};

using BasisFunction = std::function<double(double)>;

struct NamedBasis {
  std::string name;
  BasisFunction fn;
};

/// a(x, alpha) = sum_k alpha_k b_k(x).
std::shared_ptr<const Coefficient> linear_coefficient(std::vector<NamedBasis> basis);
/// c(x, gamma) = exp(sum_l gamma_l b_l(x)).
std::shared_ptr<const Coefficient> exp_linear_coefficient(std::vector<NamedBasis> basis);
/// c(x, gamma) = gamma_1.
std::shared_ptr<const Coefficient> constant_coefficient();
/// Expression coefficient over one parameter group; derivatives are symbolic.
std::shared_ptr<const Coefficient> expression_coefficient(const Expr& expr, ParamGroup group, int dim);

/// theta = (alpha, gamma).
struct Theta {
  std::vector<double> alpha;
  std::vector<double> gamma;

  std::size_t size() const { return alpha.size() + gamma.size(); }
  std::vector<double> flat() const;
  static Theta from_flat(std::span<const double> v, std::size_t p_alpha);
};

/// Closed box Theta_alpha x Theta_gamma, flattened in (alpha, gamma) order.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t size() const { return lower.size(); }
  bool contains(std::span<const double> v) const;
  void clamp(std::span<double> v) const;
};

struct ModelSpec {
  std::string name;
  std::shared_ptr<const Coefficient> drift;
  std::shared_ptr<const Coefficient> scale;
  Box bounds;
  std::optional<Theta> theta_true;

  int p_alpha() const { return drift->dim(); }
  int p_gamma() const { return scale->dim(); }
  /// Checks dimensions, a bounded box with non-empty interior, and that
  /// theta_true (when set) lies inside. Throws UsageError.
  void validate() const;
  void check_theta(const Theta& theta) const;
};

/// Names accepted by make_builtin_model.
std::vector<std::string> builtin_model_names();

/// Built-in coefficient pairs:
///   trig-1d  a = alpha1 x,                          c = exp(gamma1 cos x)
///   trig-2d  a = alpha1 x + alpha2 / (1 + x^2),     c = exp(gamma1 cos x + gamma2 sin x)
///   ou-const  a = alpha1 x,                          c = gamma1
///   ou-exp    a = alpha1 x,                          c = exp(gamma1)
/// Bounds and theta_true are left empty for the caller to fill.
ModelSpec make_builtin_model(const std::string& name);

/// Model from drift/scale expressions; dimensions default to the largest
/// parameter index referenced.
ModelSpec make_expression_model(const std::string& drift, const std::string& scale,
                                int p_alpha = 0, int p_gamma = 0);

}  // namespace sqmle
