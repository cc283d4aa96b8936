#include "sqmle/inference.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "sqmle/errors.hpp"
#include "sqmle/sqlik.hpp"

namespace sqmle {

double rate_alpha(std::size_t n, double h, double beta) {
  return std::sqrt(static_cast<double>(n)) * drift_rate_factor(h, beta);
}

double rate_alpha_closed_form(std::size_t n, double T, double beta) {
  const double nn = static_cast<double>(n);
  return std::pow(T, 1.0 - 1.0 / beta) * std::pow(nn, (2.0 - beta) / (2.0 * beta));
}

double rate_gamma(std::size_t n) { return std::sqrt(static_cast<double>(n)); }

SigmaHats sigma_hats(const ObservationSeries& obs, const ModelSpec& model, const Theta& theta_hat) {
  model.check_theta(theta_hat);
  const std::size_t n = obs.n();
  if (n < 1) throw UsageError("sigma_hats needs at least one increment");
  const int pa = model.p_alpha();
  const int pg = model.p_gamma();
  SigmaHats out;
  out.alpha = Eigen::MatrixXd::Zero(pa, pa);
  out.gamma = Eigen::MatrixXd::Zero(pg, pg);
  Eigen::VectorXd da(pa), dc(pg);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = obs.x[j];
    const double c = model.scale->value(x, theta_hat.gamma);
    if (!(c > 0.0)) {
      std::ostringstream os;
      os << "model violation: scale coefficient c(x, gamma) = " << c << " <= 0 at x = " << x;
      throw ModelViolation(os.str());
    }
    model.drift->gradient(x, theta_hat.alpha, {da.data(), static_cast<std::size_t>(pa)});
    model.scale->gradient(x, theta_hat.gamma, {dc.data(), static_cast<std::size_t>(pg)});
    out.alpha.noalias() += (da * da.transpose()) / (c * c);
    out.gamma.noalias() += (dc * dc.transpose()) / (c * c);
  }
  out.alpha /= static_cast<double>(n);
  out.gamma /= static_cast<double>(n);
  out.alpha_singular = sym_sqrt(out.alpha).singular;
  out.gamma_singular = sym_sqrt(out.gamma).singular;
  return out;
}

SymSqrt sym_sqrt(const Eigen::MatrixXd& m) {
  SymSqrt out;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0.0)) {
    out.singular = true;
    out.root = Eigen::MatrixXd::Zero(m.rows(), m.cols());
    return out;
  }
  if (ev.minCoeff() <= 1e-14 * top) out.singular = true;
  const double floor = 1e-12 * top;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < floor) {
      ev(i) = floor;
      out.clipped = true;
    }
  }
  const Eigen::MatrixXd r = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  out.root = 0.5 * (r + r.transpose());
  return out;
}

double normal_quantile_two_sided(double level) {
  if (!(level > 0.0 && level < 1.0)) throw UsageError("confidence level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
}

namespace {

struct BlockResult {
  Eigen::VectorXd z;
  std::vector<Interval> ci;
  bool clipped = false;
  bool singular = false;
};

BlockResult studentize_block(const Eigen::MatrixXd& sigma, double constant, double rate,
                             const std::vector<double>& hat, const std::vector<double>& ref, double q) {
  const auto p = static_cast<Eigen::Index>(hat.size());
  BlockResult out;
  const Eigen::MatrixXd info = constant * sigma;
  const SymSqrt root = sym_sqrt(info);
  out.clipped = root.clipped;
  out.singular = root.singular;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (out.singular) {
    out.z = Eigen::VectorXd::Constant(p, nan);
    out.ci.assign(hat.size(), Interval{nan, nan});
    return out;
  }
  Eigen::VectorXd diff(p);
  for (Eigen::Index i = 0; i < p; ++i) diff(i) = hat[static_cast<std::size_t>(i)] - ref[static_cast<std::size_t>(i)];
  out.z = rate * (root.root * diff);
  const Eigen::MatrixXd inv = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  for (Eigen::Index i = 0; i < p; ++i) {
    const double half = q * std::sqrt(inv(i, i)) / rate;
    const double c = hat[static_cast<std::size_t>(i)];
    out.ci.push_back({c - half, c + half});
  }
  return out;
}

}  // namespace

StudentizedReport studentize(const ObservationSeries& obs, const ModelSpec& model, const Theta& theta_hat,
                             const Theta& theta_ref, double beta, const InfoConstants& constants,
                             double level) {
  model.check_theta(theta_hat);
  model.check_theta(theta_ref);
  const double q = normal_quantile_two_sided(level);
  const SigmaHats s = sigma_hats(obs, model, theta_hat);
  StudentizedReport rep;
  rep.sigma_hat_alpha = s.alpha;
  rep.sigma_hat_gamma = s.gamma;
  rep.rate_alpha = rate_alpha(obs.n(), obs.h, beta);
  rep.rate_gamma = rate_gamma(obs.n());
  rep.c_alpha = constants.c_alpha;
  rep.c_gamma = constants.c_gamma;
  rep.level = level;
  const BlockResult a = studentize_block(s.alpha, constants.c_alpha, rep.rate_alpha, theta_hat.alpha,
                                         theta_ref.alpha, q);
  const BlockResult g = studentize_block(s.gamma, constants.c_gamma, rep.rate_gamma, theta_hat.gamma,
                                         theta_ref.gamma, q);
  rep.z_alpha = a.z;
  rep.z_gamma = g.z;
  rep.clipped_alpha = a.clipped;
  rep.clipped_gamma = g.clipped;
  rep.singular_alpha = a.singular;
  rep.singular_gamma = g.singular;
  rep.ci = a.ci;
  rep.ci.insert(rep.ci.end(), g.ci.begin(), g.ci.end());
  return rep;
}

StudentizedReport studentize(const ObservationSeries& obs, const ModelSpec& model, const Theta& theta_hat,
                             const Theta& theta_ref, const StableKernel& kernel, double level) {
  return studentize(obs, model, theta_hat, theta_ref, kernel.beta(), info_constants(kernel), level);
}

Eigen::MatrixXd observed_information(const ObservationSeries& obs, const ModelSpec& model,
                                     const Theta& theta_hat, const StableKernel& kernel) {
  const Eigen::MatrixXd H = quasi_hessian(obs, model, theta_hat, kernel);
  const int pa = model.p_alpha();
  Eigen::VectorXd dinv(H.rows());
  const double ra = rate_alpha(obs.n(), obs.h, kernel.beta());
  const double rg = rate_gamma(obs.n());
  for (Eigen::Index i = 0; i < dinv.size(); ++i) dinv(i) = 1.0 / (i < pa ? ra : rg);
  return -(dinv.asDiagonal() * H * dinv.asDiagonal());
}

}  // namespace sqmle
