#include "sqmle/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sqmle/errors.hpp"

namespace sqmle {

namespace {

class LinearCoefficient final : public Coefficient {
 public:
  explicit LinearCoefficient(std::vector<NamedBasis> basis) : basis_(std::move(basis)) {}
  int dim() const override { return static_cast<int>(basis_.size()); }
  double value(double x, std::span<const double> p) const override {
    double s = 0.0;
    for (std::size_t k = 0; k < basis_.size(); ++k) s += p[k] * basis_[k].fn(x);
    return s;
  }
  void gradient(double x, std::span<const double>, std::span<double> out) const override {
    for (std::size_t k = 0; k < basis_.size(); ++k) out[k] = basis_[k].fn(x);
  }
  void hessian(double, std::span<const double>, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
  }
  std::string describe() const override {
    std::string s;
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      if (k) s += " + ";
      s += "alpha" + std::to_string(k + 1) + "*" + basis_[k].name;
    }
    return s;
  }

 private:
  std::vector<NamedBasis> basis_;
};

class ExpLinearCoefficient final : public Coefficient {
 public:
  explicit ExpLinearCoefficient(std::vector<NamedBasis> basis) : basis_(std::move(basis)) {}
  int dim() const override { return static_cast<int>(basis_.size()); }
  double value(double x, std::span<const double> p) const override {
    double s = 0.0;
    for (std::size_t k = 0; k < basis_.size(); ++k) s += p[k] * basis_[k].fn(x);
    return std::exp(s);
  }
  void gradient(double x, std::span<const double> p, std::span<double> out) const override {
    const double c = value(x, p);
    for (std::size_t k = 0; k < basis_.size(); ++k) out[k] = c * basis_[k].fn(x);
  }
  void hessian(double x, std::span<const double> p, std::span<double> out) const override {
    const double c = value(x, p);
    const std::size_t d = basis_.size();
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) out[i * d + j] = c * basis_[i].fn(x) * basis_[j].fn(x);
    }
  }
  std::string describe() const override {
    std::string s = "exp(";
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      if (k) s += " + ";
      s += "gamma" + std::to_string(k + 1) + "*" + basis_[k].name;
    }
    return s + ")";
  }

 private:
  std::vector<NamedBasis> basis_;
};

class ConstantCoefficient final : public Coefficient {
 public:
  int dim() const override { return 1; }
  double value(double, std::span<const double> p) const override { return p[0]; }
  void gradient(double, std::span<const double>, std::span<double> out) const override { out[0] = 1.0; }
  void hessian(double, std::span<const double>, std::span<double> out) const override { out[0] = 0.0; }
  std::string describe() const override { return "gamma1"; }
};

class ExpressionCoefficient final : public Coefficient {
 public:
  ExpressionCoefficient(Expr e, ParamGroup group, int dim) : expr_(std::move(e)), group_(group), dim_(dim) {
    for (int i = 0; i < dim_; ++i) {
      grad_.push_back(expr_.derivative(group_, i));
      for (int j = 0; j < dim_; ++j) hess_.push_back(grad_.back().derivative(group_, j));
    }
  }
  int dim() const override { return dim_; }
  double value(double x, std::span<const double> p) const override { return eval(expr_, x, p); }
  void gradient(double x, std::span<const double> p, std::span<double> out) const override {
    for (int i = 0; i < dim_; ++i) out[i] = eval(grad_[i], x, p);
  }
  void hessian(double x, std::span<const double> p, std::span<double> out) const override {
    for (std::size_t i = 0; i < hess_.size(); ++i) out[i] = eval(hess_[i], x, p);
  }
  std::string describe() const override { return expr_.to_string(); }

 private:
  double eval(const Expr& e, double x, std::span<const double> p) const {
    return group_ == ParamGroup::alpha ? e.eval(x, p, {}) : e.eval(x, {}, p);
  }
  Expr expr_;
  ParamGroup group_;
  int dim_;
  std::vector<Expr> grad_;
  std::vector<Expr> hess_;
};

}  // namespace

std::shared_ptr<const Coefficient> linear_coefficient(std::vector<NamedBasis> basis) {
  return std::make_shared<LinearCoefficient>(std::move(basis));
}
std::shared_ptr<const Coefficient> exp_linear_coefficient(std::vector<NamedBasis> basis) {
  return std::make_shared<ExpLinearCoefficient>(std::move(basis));
}
std::shared_ptr<const Coefficient> constant_coefficient() {
  return std::make_shared<ConstantCoefficient>();
}
std::shared_ptr<const Coefficient> expression_coefficient(const Expr& expr, ParamGroup group, int dim) {
  const ParamGroup other = group == ParamGroup::alpha ? ParamGroup::gamma : ParamGroup::alpha;
  if (expr.max_index(other) > 0) {
    throw UsageError(std::string(group == ParamGroup::alpha ? "drift" : "scale") +
                     " expression may only use " + (group == ParamGroup::alpha ? "alpha" : "gamma") +
                     " parameters");
  }
  if (expr.max_index(group) > dim) {
    throw UsageError("expression uses more parameters than the declared dimension");
  }
  return std::make_shared<ExpressionCoefficient>(expr, group, dim);
}

std::vector<double> Theta::flat() const {
  std::vector<double> v(alpha);
  v.insert(v.end(), gamma.begin(), gamma.end());
  return v;
}

Theta Theta::from_flat(std::span<const double> v, std::size_t p_alpha) {
  Theta t;
  t.alpha.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(p_alpha));
  t.gamma.assign(v.begin() + static_cast<std::ptrdiff_t>(p_alpha), v.end());
  return t;
}

bool Box::contains(std::span<const double> v) const {
  if (v.size() != lower.size()) return false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= lower[i] && v[i] <= upper[i])) return false;
  }
  return true;
}

void Box::clamp(std::span<double> v) const {
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::min(std::max(v[i], lower[i]), upper[i]);
}

void ModelSpec::validate() const {
  if (!drift || !scale) throw UsageError("model '" + name + "': missing drift or scale");
  const std::size_t p = static_cast<std::size_t>(p_alpha() + p_gamma());
  if (p_alpha() < 1 || p_gamma() < 1) throw UsageError("model '" + name + "': both parameter groups need dimension >= 1");
  if (bounds.lower.size() != p || bounds.upper.size() != p) {
    std::ostringstream os;
    os << "model '" << name << "': bounds must have " << p << " entries (p_alpha + p_gamma)";
    throw UsageError(os.str());
  }
  for (std::size_t i = 0; i < p; ++i) {
    if (!std::isfinite(bounds.lower[i]) || !std::isfinite(bounds.upper[i]) || !(bounds.lower[i] < bounds.upper[i])) {
      throw UsageError("model '" + name + "': bounds must be finite with lower < upper in every coordinate");
    }
  }
  if (theta_true) {
    check_theta(*theta_true);
    if (!bounds.contains(theta_true->flat())) throw UsageError("model '" + name + "': theta_true lies outside the bounds");
  }
}

void ModelSpec::check_theta(const Theta& theta) const {
  if (theta.alpha.size() != static_cast<std::size_t>(p_alpha()) ||
      theta.gamma.size() != static_cast<std::size_t>(p_gamma())) {
    throw UsageError("model '" + name + "': theta has the wrong dimension");
  }
}

std::vector<std::string> builtin_model_names() { return {"trig-1d", "trig-2d", "ou-const", "ou-exp"}; }

ModelSpec make_builtin_model(const std::string& name) {
  const NamedBasis lin{"x", [](double x) { return x; }};
  const NamedBasis rat{"1/(1+x^2)", [](double x) { return 1.0 / (1.0 + x * x); }};
  const NamedBasis cosb{"cos(x)", [](double x) { return std::cos(x); }};
  const NamedBasis sinb{"sin(x)", [](double x) { return std::sin(x); }};
  const NamedBasis one{"1", [](double) { return 1.0; }};
  ModelSpec m;
  m.name = name;
  if (name == "trig-1d") {
    m.drift = linear_coefficient({lin});
    m.scale = exp_linear_coefficient({cosb});
  } else if (name == "trig-2d") {
    m.drift = linear_coefficient({lin, rat});
    m.scale = exp_linear_coefficient({cosb, sinb});
  } else if (name == "ou-const") {
    m.drift = linear_coefficient({lin});
    m.scale = constant_coefficient();
  } else if (name == "ou-exp") {
    m.drift = linear_coefficient({lin});
    m.scale = exp_linear_coefficient({one});
  } else {
    std::string known;
    for (const auto& n : builtin_model_names()) known += " " + n;
    throw UsageError("unknown model '" + name + "' (built-ins:" + known + ", or 'expr')");
  }
  return m;
}

ModelSpec make_expression_model(const std::string& drift, const std::string& scale, int p_alpha,
                                int p_gamma) {
  const Expr de = Expr::parse(drift);
  const Expr se = Expr::parse(scale);
  if (p_alpha <= 0) p_alpha = de.max_index(ParamGroup::alpha);
  if (p_gamma <= 0) p_gamma = se.max_index(ParamGroup::gamma);
  ModelSpec m;
  m.name = "expr";
  m.drift = expression_coefficient(de, ParamGroup::alpha, p_alpha);
  m.scale = expression_coefficient(se, ParamGroup::gamma, p_gamma);
  return m;
}

}  // namespace sqmle
