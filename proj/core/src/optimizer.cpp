#include "sqmle/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sqmle/errors.hpp"

namespace sqmle {

namespace {

constexpr double kWorst = -std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

double sanitize(double v) { return std::isfinite(v) ? v : kWorst; }

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

LocalResult nelder_mead_maximize(const Objective& f, std::vector<double> x0, const Box& box,
                                 const LocalOptions& opts) {
  const std::size_t p = x0.size();
  if (p == 0 || box.size() != p) throw UsageError("nelder_mead: dimension mismatch with bounds");
  box.clamp(x0);

  LocalResult res;
  auto eval = [&](std::vector<double>& x) {
    box.clamp(x);
    ++res.evaluations;
    return sanitize(f(x));
  };

  std::vector<std::vector<double>> pts(p + 1, x0);
  std::vector<double> vals(p + 1);
  vals[0] = eval(pts[0]);
  for (std::size_t i = 0; i < p; ++i) {
    const double width = box.upper[i] - box.lower[i];
    double step = opts.initial_step * width;
    if (pts[0][i] + step > box.upper[i]) step = -step;
    pts[i + 1][i] += step;
    vals[i + 1] = eval(pts[i + 1]);
  }

  std::vector<std::size_t> order(p + 1);
  std::vector<double> centroid(p), trial(p), trial2(p);
  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    std::iota(order.begin(), order.end(), 0);
    // Best first; ties by index keep the ordering deterministic.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[p - 1];

    double diam = 0.0;
    for (std::size_t i = 0; i <= p; ++i) {
      double d = 0.0;
      for (std::size_t k = 0; k < p; ++k) d = std::max(d, std::abs(pts[i][k] - pts[best][k]));
      diam = std::max(diam, d);
    }
    if (diam < opts.xtol * (1.0 + norm(pts[best]))) {
      res.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= p; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < p; ++k) centroid[k] += pts[i][k] / static_cast<double>(p);
    }
    for (std::size_t k = 0; k < p; ++k) trial[k] = centroid[k] + (centroid[k] - pts[worst][k]);
    const double fr = eval(trial);

    if (fr > vals[best]) {
      for (std::size_t k = 0; k < p; ++k) trial2[k] = centroid[k] + 2.0 * (centroid[k] - pts[worst][k]);
      const double fe = eval(trial2);
      if (fe > fr) {
        pts[worst] = trial2;
        vals[worst] = fe;
      } else {
        pts[worst] = trial;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr > vals[second_worst]) {
      pts[worst] = trial;
      vals[worst] = fr;
      continue;
    }
    // Contraction: outside if the reflection improved on the worst point.
    const bool outside = fr > vals[worst];
    for (std::size_t k = 0; k < p; ++k) {
      trial2[k] = outside ? centroid[k] + 0.5 * (trial[k] - centroid[k])
                          : centroid[k] + 0.5 * (pts[worst][k] - centroid[k]);
    }
    const double fc = eval(trial2);
    if (fc > (outside ? fr : vals[worst])) {
      pts[worst] = trial2;
      vals[worst] = fc;
      continue;
    }
    // Shrink toward the best vertex.
    for (std::size_t i = 0; i <= p; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < p; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
      vals[i] = eval(pts[i]);
    }
  }

  const auto it = std::max_element(vals.begin(), vals.end());
  const auto bi = static_cast<std::size_t>(it - vals.begin());
  // max_element returns the first maximum; matches the stable ordering above.
  res.x = pts[bi];
  res.value = vals[bi];
  return res;
}

LocalResult projected_bfgs_maximize(const Objective& f, const Gradient& grad, std::vector<double> x0,
                                    const Box& box, const LocalOptions& opts) {
  const std::size_t p = x0.size();
  if (p == 0 || box.size() != p) throw UsageError("bfgs: dimension mismatch with bounds");
  box.clamp(x0);
  LocalResult res;
  std::vector<double> x = x0;
  double fx = sanitize(f(x));
  ++res.evaluations;
  if (!std::isfinite(fx)) {
    res.x = x;
    res.value = fx;
    return res;
  }
  std::vector<double> g = grad(x);
  // Inverse Hessian approximation of -f, row-major.
  std::vector<double> H(p * p, 0.0);
  auto reset = [&] {
    std::fill(H.begin(), H.end(), 0.0);
    for (std::size_t i = 0; i < p; ++i) H[i * p + i] = 1.0;
  };
  reset();

  auto project_grad = [&](const std::vector<double>& xx, std::vector<double> gg) {
    for (std::size_t i = 0; i < p; ++i) {
      if ((xx[i] <= box.lower[i] && gg[i] < 0.0) || (xx[i] >= box.upper[i] && gg[i] > 0.0)) gg[i] = 0.0;
    }
    return gg;
  };

  std::vector<double> d(p), xn(p);
  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    const auto pg = project_grad(x, g);
    if (norm(pg) < 1e-10 * (1.0 + std::abs(fx))) {
      res.converged = true;
      break;
    }
    // Ascent direction d = H g, restricted to free coordinates.
    for (std::size_t i = 0; i < p; ++i) {
      d[i] = 0.0;
      for (std::size_t j = 0; j < p; ++j) d[i] += H[i * p + j] * pg[j];
    }
    double slope = 0.0;
    for (std::size_t i = 0; i < p; ++i) slope += d[i] * g[i];
    if (!(slope > 0.0)) {
      reset();
      d = pg;
      slope = 0.0;
      for (std::size_t i = 0; i < p; ++i) slope += d[i] * g[i];
    }
    double t = 1.0;
    double fn = kWorst;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < p; ++i) xn[i] = x[i] + t * d[i];
      box.clamp(xn);
      fn = sanitize(f(xn));
      ++res.evaluations;
      double dirderiv = 0.0;
      for (std::size_t i = 0; i < p; ++i) dirderiv += g[i] * (xn[i] - x[i]);
      if (std::isfinite(fn) && fn >= fx + 1e-4 * dirderiv) {
        accepted = true;
        break;
      }
      // Near the optimum the value change drowns in rounding; fall back on
      // the projected gradient norm.
      if (std::isfinite(fn) && std::abs(fn - fx) <= 64.0 * kEps * (1.0 + std::abs(fx)) &&
          norm(project_grad(xn, grad(xn))) < norm(pg)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    double step = 0.0;
    for (std::size_t i = 0; i < p; ++i) step = std::max(step, std::abs(xn[i] - x[i]));
    if (!accepted || step < opts.xtol * (1.0 + norm(x))) {
      if (accepted && fn > fx) {
        x = xn;
        fx = fn;
      }
      res.converged = accepted;
      break;
    }
    std::vector<double> gn = grad(xn);
    std::vector<double> s(p), y(p);
    double sy = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      s[i] = xn[i] - x[i];
      y[i] = -(gn[i] - g[i]);  // curvature of -f
      sy += s[i] * y[i];
    }
    x = xn;
    fx = fn;
    g = std::move(gn);
    if (sy > 1e-12) {
      std::vector<double> Hy(p, 0.0);
      double yHy = 0.0;
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) Hy[i] += H[i * p + j] * y[j];
        yHy += y[i] * Hy[i];
      }
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
          H[i * p + j] += ((sy + yHy) * s[i] * s[j]) / (sy * sy) - (Hy[i] * s[j] + s[i] * Hy[j]) / sy;
        }
      }
    }
  }
  res.x = x;
  res.value = fx;
  return res;
}

}  // namespace sqmle
