#include "sqmle/llt_lab.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "sqmle/bessel.hpp"
#include "sqmle/errors.hpp"
#include "sqmle/quadrature.hpp"

namespace sqmle {

namespace {

constexpr double kPi = std::numbers::pi;

// 2 c_beta Gamma(-beta), the prefactor of the tempered-stable exponent.
double tempered_prefactor(double beta) { return 2.0 * levy_density_constant(beta) * std::tgamma(-beta); }

}  // namespace

CfKind parse_cf_kind(const std::string& name) {
  if (name == "stable") return CfKind::stable;
  if (name == "tempered_stable" || name == "tempered-stable") return CfKind::tempered_stable;
  if (name == "gh_nig" || name == "gh" || name == "nig") return CfKind::gh_nig;
  throw UsageError("unknown characteristic-function kind '" + name + "' (expected stable, tempered_stable or gh_nig)");
}

std::string to_string(CfKind kind) {
  switch (kind) {
    case CfKind::stable: return "stable";
    case CfKind::tempered_stable: return "tempered_stable";
    case CfKind::gh_nig: return "gh_nig";
  }
  return "?";
}

CfModel CfModel::stable(double beta) {
  CfModel m;
  m.kind = CfKind::stable;
  m.beta = beta;
  return m;
}

CfModel CfModel::tempered_stable(double beta, double lambda) {
  CfModel m;
  m.kind = CfKind::tempered_stable;
  m.beta = beta;
  m.lambda_tempering = lambda;
  return m;
}

CfModel CfModel::gh(double lambda, double eta) {
  CfModel m;
  m.kind = CfKind::gh_nig;
  m.beta = 1.0;
  m.gh_lambda = lambda;
  m.gh_eta = eta;
  return m;
}

void CfModel::validate() const {
  switch (kind) {
    case CfKind::stable:
      if (!(beta > 0.0 && beta <= 2.0)) throw DomainError("stable cf: beta must lie in (0, 2]");
      break;
    case CfKind::tempered_stable:
      if (!(beta >= 1.0 && beta < 2.0)) throw DomainError("tempered-stable cf: beta must lie in [1, 2)");
      if (!(lambda_tempering > 0.0)) throw DomainError("tempered-stable cf: lambda must be positive");
      break;
    case CfKind::gh_nig:
      if (beta != 1.0) throw DomainError("gh cf: the law is locally Cauchy, beta must be 1");
      if (!(gh_eta > 0.0)) throw DomainError("gh cf: eta must be positive");
      if (!std::isfinite(gh_lambda)) throw DomainError("gh cf: lambda must be finite");
      break;
  }
}

std::string CfModel::describe() const {
  std::ostringstream os;
  switch (kind) {
    case CfKind::stable: os << "stable(beta=" << beta << ")"; break;
    case CfKind::tempered_stable: os << "tempered_stable(beta=" << beta << ", lambda=" << lambda_tempering << ")"; break;
    case CfKind::gh_nig: os << "gh(lambda=" << gh_lambda << ", eta=" << gh_eta << ")"; break;
  }
  return os.str();
}

double CfModel::exponent(double u, double h) const {
  u = std::abs(u);
  switch (kind) {
    case CfKind::stable:
      return -std::pow(u, beta);
    case CfKind::tempered_stable: {
      if (beta == 1.0) {
        const double lh = lambda_tempering * h;
        const double r = u / lh;
        return (lh * std::log1p(r * r) - 2.0 * u * std::atan(r)) / kPi;
      }
      const double L = lambda_tempering * std::pow(h, 1.0 / beta);
      const double mod = std::pow(L * L + u * u, 0.5 * beta);
      return tempered_prefactor(beta) * (mod * std::cos(beta * std::atan2(u, L)) - std::pow(lambda_tempering, beta) * h);
    }
    case CfKind::gh_nig: {
      const double eh = gh_eta * h;
      const double s = std::sqrt(eh * eh + u * u);
      if (gh_lambda == -0.5) return -u * u / (eh + s);
      const double z = s / h;
      return 0.5 * gh_lambda * h * std::log((eh * eh) / (eh * eh + u * u)) +
             h * (log_bessel_k(gh_lambda, z) - log_bessel_k(gh_lambda, gh_eta));
    }
  }
  return 0.0;
}

double CfModel::exponent_generic(double u, double h) const {
  // Unit-time exponent evaluated at the rescaled frequency.
  const double v = std::abs(u) * std::pow(h, -1.0 / beta);
  double psi1 = 0.0;
  switch (kind) {
    case CfKind::stable:
      psi1 = -std::pow(v, beta);
      break;
    case CfKind::tempered_stable: {
      const double lam = lambda_tempering;
      if (beta == 1.0) {
        psi1 = (lam * std::log1p((v / lam) * (v / lam)) - 2.0 * v * std::atan(v / lam)) / kPi;
      } else {
        psi1 = tempered_prefactor(beta) *
               (std::pow(lam * lam + v * v, 0.5 * beta) * std::cos(beta * std::atan(v / lam)) - std::pow(lam, beta));
      }
      break;
    }
    case CfKind::gh_nig: {
      const double e2 = gh_eta * gh_eta;
      psi1 = 0.5 * gh_lambda * std::log(e2 / (e2 + v * v)) + log_bessel_k(gh_lambda, std::sqrt(e2 + v * v)) -
             log_bessel_k(gh_lambda, gh_eta);
      break;
    }
  }
  return h * psi1;
}

double CfModel::exponent_derivative(double u, double h) const {
  const double sgn = u < 0.0 ? -1.0 : 1.0;
  u = std::abs(u);
  double d = 0.0;
  switch (kind) {
    case CfKind::stable:
      d = -beta * std::pow(u, beta - 1.0);
      break;
    case CfKind::tempered_stable:
      if (beta == 1.0) {
        d = -2.0 / kPi * std::atan(u / (lambda_tempering * h));
      } else {
        const double L = lambda_tempering * std::pow(h, 1.0 / beta);
        d = -tempered_prefactor(beta) * beta * std::pow(L * L + u * u, 0.5 * (beta - 1.0)) *
            std::sin((beta - 1.0) * std::atan2(u, L));
      }
      break;
    case CfKind::gh_nig: {
      const double eh = gh_eta * h;
      const double s = std::sqrt(eh * eh + u * u);
      // The log-prefactor and the lambda / z part of K' cancel.
      d = -(u / s) * bessel_k_ratio(gh_lambda, s / h);
      break;
    }
  }
  return sgn * d;
}

double tempered_exponent_by_levy_quadrature(double beta, double lambda, double u, double tol) {
  if (!(beta >= 1.0 && beta < 2.0) || !(lambda > 0.0)) throw DomainError("tempered Levy quadrature: bad parameters");
  const double cb = levy_density_constant(beta);
  u = std::abs(u);
  auto integrand = [&](double z) {
    const double s = std::sin(0.5 * u * z);
    return std::array<double, 1>{-4.0 * cb * s * s * std::exp(-lambda * z) * std::pow(z, -1.0 - beta)};
  };
  const double zmax = 60.0 / lambda;
  std::vector<double> breaks{0.0};
  for (double b = 1e-10; b < 1.0; b *= 10.0) breaks.push_back(b);
  const double step = std::min(1.0, kPi / std::max(u, 1e-300));
  for (double b = 1.0; b < zmax; b += step) breaks.push_back(b);
  breaks.push_back(zmax);
  return quad::integrate<1>(integrand, std::span<const double>(breaks), tol, 200000).value[0];
}

std::vector<double> symmetric_grid(double half_width, double spacing) {
  if (!(half_width > 0.0) || !(spacing > 0.0)) throw UsageError("symmetric_grid: half-width and spacing must be positive");
  const long m = std::lround(half_width / spacing);
  std::vector<double> g(static_cast<std::size_t>(2 * m + 1));
  for (long i = -m; i <= m; ++i) g[static_cast<std::size_t>(i + m)] = static_cast<double>(i) * spacing;
  return g;
}

namespace {

void check_symmetric(const std::vector<double>& grid) {
  if (grid.size() < 3) throw UsageError("density grid needs at least three points");
  const std::size_t n = grid.size();
  const double scale = std::max(std::abs(grid.front()), std::abs(grid.back()));
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(grid[i] + grid[n - 1 - i]) > 1e-12 * (1.0 + scale)) {
      throw UsageError("density grid must be symmetric about 0");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) throw UsageError("density grid must be increasing");
  }
}

}  // namespace

InvertedDensity invert_density(const CfModel& cf, double h, const std::vector<double>& grid) {
  cf.validate();
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("invert_density: h must be positive");
  check_symmetric(grid);
  const double ymax = grid.back();

  // Composite Gauss-Legendre nodes with weights exp(psi_h) / pi folded in.
  static const quad::GaussRule gl = quad::gauss_legendre(10);
  std::vector<double> nu, nw;
  auto add_panel = [&](double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      const double u = mid + half * gl.nodes[k];
      nu.push_back(u);
      nw.push_back(half * gl.weights[k] * std::exp(cf.exponent(u, h)) / kPi);
    }
  };
  double a = 0.0;
  double b = 1e-7;
  add_panel(a, b);
  while (b < 0.05) {
    a = b;
    b = std::min(0.05, b * 1.6);
    add_panel(a, b);
  }
  const double width = std::min(0.05, 3.0 / std::max(ymax, 1e-300));
  long panels = 0;
  while (cf.exponent(b, h) > -45.0) {
    a = b;
    b = a + width;
    add_panel(a, b);
    if (++panels > 2000000) throw NumericError("invert_density: characteristic function does not decay");
  }

  InvertedDensity out;
  out.grid = grid;
  out.f.assign(grid.size(), 0.0);
  out.nodes = nu.size();
  const std::size_t n = grid.size();
  const std::size_t mid = n / 2;
  for (std::size_t i = mid; i < n; ++i) {
    const double y = grid[i];
    double s = 0.0;
    for (std::size_t k = 0; k < nu.size(); ++k) s += nw[k] * std::cos(nu[k] * y);
    out.f[i] = s;
    out.f[n - 1 - i] = s;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (out.f[i] < 0.0) {
      const double w = 0.5 * ((i > 0 ? grid[i] - grid[i - 1] : 0.0) + (i + 1 < n ? grid[i + 1] - grid[i] : 0.0));
      out.clip_mass += -out.f[i] * w;
      out.f[i] = 0.0;
    }
  }
  return out;
}

double l1_distance(const std::vector<double>& grid, const std::vector<double>& f, const StableKernel& kernel) {
  if (grid.size() != f.size()) throw UsageError("l1_distance: density and grid lengths differ");
  check_symmetric(grid);
  const std::size_t n = grid.size();
  const double dy = (grid.back() - grid.front()) / static_cast<double>(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(grid[i] - grid[i - 1] - dy) > 1e-9 * dy) throw UsageError("l1_distance: grid must be uniform");
  }
  double diff = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (i == 0 || i + 1 == n) ? 0.5 * dy : dy;
    diff += w * std::abs(f[i] - kernel.density(grid[i]));
    mass += w * f[i];
  }
  const double W = grid.back();
  double tail = 0.0;
  if (kernel.uses_closed_form() || W >= kernel.options().tail_cutoff) {
    tail = kernel.upper_tail_mass(W);
  } else {
    tail = 0.5 - quad::integrate([&](double y) { return kernel.density(y); }, 0.0, W, 1e-12).value;
  }
  return diff + std::abs(2.0 * tail - (1.0 - mass));
}

std::vector<double> log_spaced(double hi, double lo, int count) {
  if (count < 2 || !(hi > 0.0) || !(lo > 0.0)) throw UsageError("log_spaced: need count >= 2 and positive ends");
  std::vector<double> v(static_cast<std::size_t>(count));
  const double r = std::log(lo / hi);
  for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = hi * std::exp(r * i / (count - 1));
  v.front() = hi;
  v.back() = lo;
  return v;
}

namespace {

// Least squares of y on polynomial in x of the given degree; returns coefficients.
Eigen::VectorXd poly_fit(const std::vector<double>& x, const std::vector<double>& y, int degree) {
  Eigen::MatrixXd A(static_cast<Eigen::Index>(x.size()), degree + 1);
  Eigen::VectorXd b(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    double p = 1.0;
    for (int d = 0; d <= degree; ++d) {
      A(static_cast<Eigen::Index>(i), d) = p;
      p *= x[i];
    }
    b(static_cast<Eigen::Index>(i)) = y[i];
  }
  return A.colPivHouseholderQr().solve(b);
}

}  // namespace

RateFit rate_fit(const CfModel& cf, const StableKernel& kernel, std::vector<double> h_values,
                 const RateFitOptions& opts) {
  cf.validate();
  if (kernel.beta() != cf.beta) throw UsageError("rate_fit: kernel beta differs from the driver's beta");
  std::sort(h_values.begin(), h_values.end(), std::greater<>());
  if (std::adjacent_find(h_values.begin(), h_values.end()) != h_values.end()) {
    throw UsageError("rate_fit: h values must be distinct");
  }
  if (h_values.size() < 4) throw UsageError("rate_fit: needs at least four h values");
  if (!(h_values.back() > 0.0)) throw UsageError("rate_fit: h values must be positive");
  if (h_values.front() / h_values.back() < 100.0 * (1.0 - 1e-12)) {
    throw UsageError("rate_fit: h values must span at least two decades");
  }

  RateFit out;
  out.h_values = h_values;
  out.l1_values.assign(h_values.size(), 0.0);
  const std::vector<double> grid = symmetric_grid(opts.half_width, opts.spacing);
  std::vector<std::exception_ptr> errors(h_values.size());
  auto work = [&](std::size_t i) {
    try {
      const InvertedDensity d = invert_density(cf, h_values[i], grid);
      out.l1_values[i] = l1_distance(grid, d.f, kernel);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = static_cast<std::size_t>(std::max(1, opts.workers));
  if (workers == 1) {
    for (std::size_t i = 0; i < h_values.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < h_values.size(); i += workers) work(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  out.used.assign(h_values.size(), true);
  for (std::size_t i = 0; i < h_values.size(); ++i) {
    if (!(out.l1_values[i] > opts.noise_floor)) {
      out.used[i] = false;
      std::ostringstream os;
      os << "h=" << h_values[i] << ": l1 distance " << out.l1_values[i] << " at or below the noise floor, excluded";
      out.warnings.push_back(os.str());
    }
  }
  auto collect = [&](std::vector<double>& lx, std::vector<double>& ly) {
    lx.clear();
    ly.clear();
    for (std::size_t i = 0; i < h_values.size(); ++i) {
      if (!out.used[i]) continue;
      lx.push_back(std::log(h_values[i]));
      ly.push_back(std::log(out.l1_values[i]));
    }
  };
  std::vector<double> lx, ly;
  collect(lx, ly);
  while (lx.size() > 4) {
    const Eigen::VectorXd q = poly_fit(lx, ly, 2);
    if (!(std::abs(q(2)) > opts.curvature_limit)) break;
    // h is sorted decreasing, so the first used entry is the largest h.
    const auto first = static_cast<std::size_t>(std::find(out.used.begin(), out.used.end(), true) - out.used.begin());
    out.used[first] = false;
    std::ostringstream os;
    os << "h=" << h_values[first] << ": excluded, log-log curvature " << q(2) << " exceeds " << opts.curvature_limit;
    out.warnings.push_back(os.str());
    collect(lx, ly);
  }
  if (lx.size() < 2) {
    out.slope = std::numeric_limits<double>::quiet_NaN();
    out.intercept = std::numeric_limits<double>::quiet_NaN();
    out.quadratic = std::numeric_limits<double>::quiet_NaN();
    out.warnings.push_back("fewer than two usable points; slope undefined");
    return out;
  }
  const Eigen::VectorXd lin = poly_fit(lx, ly, 1);
  out.intercept = lin(0);
  out.slope = lin(1);
  out.quadratic = lx.size() >= 3 ? poly_fit(lx, ly, 2)(2) : 0.0;
  return out;
}

}  // namespace sqmle
