#include "sqmle/sqlik.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "sqmle/errors.hpp"

namespace sqmle {

namespace {

void check_inputs(const ObservationSeries& obs, const ModelSpec& model, const Theta& theta) {
  if (obs.n() < 1) throw UsageError("quasi-likelihood needs at least one increment");
  if (!(obs.h > 0.0)) throw UsageError("quasi-likelihood needs a positive sampling step");
  model.check_theta(theta);
  if (model.bounds.size() == theta.size() && !model.bounds.contains(theta.flat())) {
    throw DomainError("theta lies outside the parameter bounds of model '" + model.name + "'");
  }
}

double scale_at(const ModelSpec& model, const Theta& theta, double x, std::size_t j) {
  const double c = model.scale->value(x, theta.gamma);
  if (!(c > 0.0)) {
    std::ostringstream os;
    os << "model violation: scale coefficient c(x, gamma) = " << c << " <= 0 at observation " << j
       << " (x = " << x << ")";
    throw ModelViolation(os.str());
  }
  return c;
}

}  // namespace

double drift_rate_factor(double h, double beta) {
  if (beta == 1.0) return 1.0;
  return std::exp((1.0 - 1.0 / beta) * std::log(h));
}

std::vector<double> residuals(const ObservationSeries& obs, const ModelSpec& model, const Theta& theta,
                              double beta) {
  check_inputs(obs, model, theta);
  const std::size_t n = obs.n();
  const double h = obs.h;
  const double hb = std::pow(h, 1.0 / beta);
  std::vector<double> eps(n);
  for (std::size_t j = 1; j <= n; ++j) {
    const double x = obs.x[j - 1];
    const double a = model.drift->value(x, theta.alpha);
    const double c = scale_at(model, theta, x, j);
    eps[j - 1] = (obs.x[j] - x - h * a) / (hb * c);
  }
  return eps;
}

double quasi_loglik(const ObservationSeries& obs, const ModelSpec& model, const Theta& theta,
                    const StableKernel& kernel, LikPath path) {
  const double beta = kernel.beta();
  if (path == LikPath::automatic) path = beta == 1.0 ? LikPath::cauchy_explicit : LikPath::general;
  if (path == LikPath::cauchy_explicit && beta != 1.0) {
    throw UsageError("the explicit Cauchy quasi-likelihood requires beta = 1");
  }
  check_inputs(obs, model, theta);
  const std::size_t n = obs.n();
  const double h = obs.h;
  const double hb = std::pow(h, 1.0 / beta);
  const double log_h_term = std::log(h) / beta;
  const double log_pi_h = std::log(std::numbers::pi * h);
  double sum = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    const double x = obs.x[j - 1];
    const double a = model.drift->value(x, theta.alpha);
    const double c = scale_at(model, theta, x, j);
    const double e = (obs.x[j] - x - h * a) / (hb * c);
    if (path == LikPath::cauchy_explicit) {
      sum -= log_pi_h + std::log(c) + std::log1p(e * e);
    } else {
      sum += kernel.log_density(e) - std::log(c) - log_h_term;
    }
  }
  return sum;
}

Eigen::VectorXd quasi_score(const ObservationSeries& obs, const ModelSpec& model, const Theta& theta,
                            const StableKernel& kernel) {
  check_inputs(obs, model, theta);
  const double beta = kernel.beta();
  const int pa = model.p_alpha();
  const int pg = model.p_gamma();
  const double h = obs.h;
  const double hb = std::pow(h, 1.0 / beta);
  const double r = drift_rate_factor(h, beta);
  Eigen::VectorXd da(pa), dc(pg);
  Eigen::VectorXd sa = Eigen::VectorXd::Zero(pa), sg = Eigen::VectorXd::Zero(pg);
  for (std::size_t j = 1; j <= obs.n(); ++j) {
    const double x = obs.x[j - 1];
    const double a = model.drift->value(x, theta.alpha);
    const double c = scale_at(model, theta, x, j);
    const double e = (obs.x[j] - x - h * a) / (hb * c);
    model.drift->gradient(x, theta.alpha, {da.data(), static_cast<std::size_t>(pa)});
    model.scale->gradient(x, theta.gamma, {dc.data(), static_cast<std::size_t>(pg)});
    const StableDerivs d = kernel.evaluate(e);
    const double g = d.dphi / d.phi;
    sa -= (g / c) * da;
    sg -= ((1.0 + e * g) / c) * dc;
  }
  Eigen::VectorXd out(pa + pg);
  out << r * sa, sg;
  return out;
}

Eigen::MatrixXd quasi_hessian(const ObservationSeries& obs, const ModelSpec& model, const Theta& theta,
                              const StableKernel& kernel) {
  check_inputs(obs, model, theta);
  const double beta = kernel.beta();
  const int pa = model.p_alpha();
  const int pg = model.p_gamma();
  const double h = obs.h;
  const double hb = std::pow(h, 1.0 / beta);
  const double r = drift_rate_factor(h, beta);
  Eigen::VectorXd da(pa), dc(pg);
  Eigen::MatrixXd d2a(pa, pa), d2c(pg, pg);
  Eigen::MatrixXd Haa = Eigen::MatrixXd::Zero(pa, pa);
  Eigen::MatrixXd Hag = Eigen::MatrixXd::Zero(pa, pg);
  Eigen::MatrixXd Hgg = Eigen::MatrixXd::Zero(pg, pg);
  // Row-major buffers from the coefficient interface.
  std::vector<double> buf_a(static_cast<std::size_t>(pa * pa)), buf_c(static_cast<std::size_t>(pg * pg));
  for (std::size_t j = 1; j <= obs.n(); ++j) {
    const double x = obs.x[j - 1];
    const double a = model.drift->value(x, theta.alpha);
    const double c = scale_at(model, theta, x, j);
    const double e = (obs.x[j] - x - h * a) / (hb * c);
    model.drift->gradient(x, theta.alpha, {da.data(), static_cast<std::size_t>(pa)});
    model.scale->gradient(x, theta.gamma, {dc.data(), static_cast<std::size_t>(pg)});
    model.drift->hessian(x, theta.alpha, buf_a);
    model.scale->hessian(x, theta.gamma, buf_c);
    for (int i = 0; i < pa; ++i)
      for (int k = 0; k < pa; ++k) d2a(i, k) = buf_a[static_cast<std::size_t>(i * pa + k)];
    for (int i = 0; i < pg; ++i)
      for (int k = 0; k < pg; ++k) d2c(i, k) = buf_c[static_cast<std::size_t>(i * pg + k)];
    const StableDerivs d = kernel.evaluate(e);
    const double g = d.dphi / d.phi;
    const double dg = d.ddphi / d.phi - g * g;
    const double kk = 1.0 + e * g;
    const double c2 = c * c;
    Haa += (r * r * dg / c2) * (da * da.transpose()) - (r * g / c) * d2a;
    Hag += (r * (g + e * dg) / c2) * (da * dc.transpose());
    Hgg += ((1.0 + 2.0 * e * g + e * e * dg) / c2) * (dc * dc.transpose()) - (kk / c) * d2c;
  }
  Eigen::MatrixXd H(pa + pg, pa + pg);
  H.topLeftCorner(pa, pa) = Haa;
  H.topRightCorner(pa, pg) = Hag;
  H.bottomLeftCorner(pg, pa) = Hag.transpose();
  H.bottomRightCorner(pg, pg) = Hgg;
  // Blocks are accumulated from symmetric outer products; enforce exact symmetry.
  H = 0.5 * (H + H.transpose()).eval();
  return H;
}

Eigen::VectorXd normalize_score(const Eigen::VectorXd& score, std::size_t n, double h, double beta,
                                int p_alpha) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double ra = sn * drift_rate_factor(h, beta);
  Eigen::VectorXd out = score;
  out.head(p_alpha) /= ra;
  out.tail(score.size() - p_alpha) /= sn;
  return out;
}

OptimizerMethod parse_optimizer_method(const std::string& name) {
  if (name == "simplex") return OptimizerMethod::simplex;
  if (name == "bfgs") return OptimizerMethod::bfgs;
  throw UsageError("unknown optimizer method '" + name + "' (expected simplex or bfgs)");
}

std::string to_string(OptimizerMethod m) { return m == OptimizerMethod::simplex ? "simplex" : "bfgs"; }

InitMode parse_init_mode(const std::string& name) {
  if (name == "box") return InitMode::box;
  if (name == "around") return InitMode::around;
  throw UsageError("unknown init mode '" + name + "' (expected box or around)");
}

std::string to_string(InitMode m) { return m == InitMode::box ? "box" : "around"; }

FitResult fit(const ObservationSeries& obs, const ModelSpec& model, const StableKernel& kernel,
              const OptimizerConfig& opt, RngStream& rng) {
  model.validate();
  obs.validate();
  if (opt.restarts < 1) throw UsageError("fit: restarts must be >= 1");
  if (opt.max_iter < 1) throw UsageError("fit: max_iter must be >= 1");
  const std::size_t pa = static_cast<std::size_t>(model.p_alpha());
  const Box& box = model.bounds;
  const std::size_t p = box.size();

  std::vector<double> center;
  if (opt.init == InitMode::around) {
    if (opt.init_center) center = opt.init_center->flat();
    else if (model.theta_true) center = model.theta_true->flat();
    else throw UsageError("fit: init mode 'around' needs an init center or theta_true");
    if (center.size() != p) throw UsageError("fit: init center has the wrong dimension");
    if (!(opt.init_halfwidth > 0.0)) throw UsageError("fit: init_halfwidth must be positive");
  }

  FitResult res;
  std::vector<std::vector<double>> starts(static_cast<std::size_t>(opt.restarts), std::vector<double>(p));
  for (auto& s : starts) {
    for (std::size_t i = 0; i < p; ++i) {
      if (opt.init == InitMode::box) s[i] = rng.uniform(box.lower[i], box.upper[i]);
      else s[i] = rng.uniform(center[i] - opt.init_halfwidth, center[i] + opt.init_halfwidth);
    }
    box.clamp(s);
  }

  std::string violation;
  long violations = 0;
  long evals = 0;
  const Objective objective = [&](std::span<const double> v) {
    try {
      return quasi_loglik(obs, model, Theta::from_flat(v, pa), kernel);
    } catch (const ModelViolation& e) {
      if (violation.empty()) violation = e.what();
      ++violations;
      return -std::numeric_limits<double>::infinity();
    }
  };
  const Gradient gradient = [&](std::span<const double> v) {
    const Eigen::VectorXd s = quasi_score(obs, model, Theta::from_flat(v, pa), kernel);
    return std::vector<double>(s.data(), s.data() + s.size());
  };

  LocalOptions lo;
  lo.max_iter = opt.max_iter;
  lo.xtol = opt.xtol;

  bool have_best = false;
  double best_val = -std::numeric_limits<double>::infinity();
  double best_norm = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < starts.size(); ++r) {
    res.starts.push_back(Theta::from_flat(starts[r], pa));
    res.start_loglik.push_back(objective(starts[r]));
    ++evals;
    LocalResult lr;
    try {
      lr = opt.method == OptimizerMethod::simplex
               ? nelder_mead_maximize(objective, starts[r], box, lo)
               : projected_bfgs_maximize(objective, gradient, starts[r], box, lo);
    } catch (const ModelViolation& e) {
      if (violation.empty()) violation = e.what();
      ++violations;
      continue;
    }
    evals += lr.evaluations;
    if (!std::isfinite(lr.value)) continue;
    double sn = std::numeric_limits<double>::infinity();
    try {
      sn = normalize_score(quasi_score(obs, model, Theta::from_flat(lr.x, pa), kernel), obs.n(), obs.h,
                           kernel.beta(), static_cast<int>(pa))
               .norm();
    } catch (const ModelViolation&) {
    }
    const bool better = !have_best || lr.value > best_val || (lr.value == best_val && sn < best_norm);
    if (better) {
      have_best = true;
      best_val = lr.value;
      best_norm = sn;
      res.theta_hat = Theta::from_flat(lr.x, pa);
      res.converged = lr.converged;
      res.best_restart = static_cast<int>(r);
    }
  }
  res.n_evals = evals;
  res.restarts_used = static_cast<int>(starts.size());
  if (!have_best) {
    if (violations > 0) throw ModelViolation(violation + " (every restart was blocked)");
    throw OptimizationError("fit: no restart reached a finite quasi-likelihood value");
  }
  res.loglik = best_val;
  res.score_norm = best_norm;
  return res;
}

}  // namespace sqmle
