#include "sqmle/sde_sim.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "sqmle/errors.hpp"

namespace sqmle {

ObservationSeries ObservationSeries::from_values(std::vector<double> x, double T) {
  ObservationSeries s;
  s.x = std::move(x);
  s.T = T;
  if (s.x.size() < 2) throw UsageError("observation series needs at least two values");
  s.h = T / static_cast<double>(s.n());
  s.validate();
  return s;
}

void ObservationSeries::validate() const {
  if (x.size() < 2) throw UsageError("observation series needs at least two values");
  if (!(h > 0.0) || !(T > 0.0)) throw UsageError("observation series: h and T must be positive");
  if (std::abs(h * static_cast<double>(n()) - T) > 1e-12 * std::max(1.0, T)) {
    throw UsageError("observation series: h n != T");
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j])) throw UsageError("observation series: non-finite value at index " + std::to_string(j));
  }
}

FinePath euler_path(const ModelSpec& model, const Theta& theta, double T, double x0,
                    std::span<const double> dJ) {
  model.check_theta(theta);
  if (dJ.empty()) throw UsageError("simulate: n_fine must be at least 1");
  if (!(T > 0.0)) throw UsageError("simulate: T must be positive");
  FinePath path;
  path.T = T;
  path.dt = T / static_cast<double>(dJ.size());
  path.x.resize(dJ.size() + 1);
  path.x[0] = x0;
  double x = x0;
  for (std::size_t k = 0; k < dJ.size(); ++k) {
    const double a = model.drift->value(x, theta.alpha);
    const double c = model.scale->value(x, theta.gamma);
    x = x + a * path.dt + c * dJ[k];
    if (!std::isfinite(x)) {
      throw NumericError("simulation overflow: non-finite state at step " + std::to_string(k + 1));
    }
    path.x[k + 1] = x;
  }
  return path;
}

FinePath simulate_fine(const ModelSpec& model, const NoiseSpec& noise, double T, std::size_t n_fine,
                       double x0, RngStream& rng) {
  if (!model.theta_true) throw UsageError("simulate: model has no theta_true");
  if (n_fine < 1) throw UsageError("simulate: n_fine must be at least 1");
  if (!(T > 0.0)) throw UsageError("simulate: T must be positive");
  const auto dJ = sample_increments(noise, T / static_cast<double>(n_fine), n_fine, rng);
  return euler_path(model, *model.theta_true, T, x0, dJ);
}

ObservationSeries thin(const FinePath& path, std::size_t factor) {
  const std::size_t nf = path.n_fine();
  if (factor < 1 || nf % factor != 0) {
    throw UsageError("thin: factor " + std::to_string(factor) + " does not divide n_fine " + std::to_string(nf));
  }
  ObservationSeries obs;
  const std::size_t n = nf / factor;
  obs.x.resize(n + 1);
  for (std::size_t j = 0; j <= n; ++j) obs.x[j] = path.x[j * factor];
  obs.T = path.T;
  obs.h = path.T / static_cast<double>(n);
  return obs;
}

void write_observations_csv(const ObservationSeries& obs, std::ostream& os) {
  os << "t,x\n";
  char buf[64];
  for (std::size_t j = 0; j < obs.x.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", obs.h * static_cast<double>(j), obs.x[j]);
    os << buf;
  }
}

ObservationSeries read_observations_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw UsageError("observation CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,x") throw UsageError("observation CSV: expected header 't,x', got '" + line + "'");
  std::vector<double> t;
  std::vector<double> x;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw UsageError("observation CSV: missing comma on line " + std::to_string(lineno));
    try {
      std::size_t used = 0;
      const std::string ts = line.substr(0, comma);
      const std::string xs = line.substr(comma + 1);
      t.push_back(std::stod(ts, &used));
      if (used != ts.size()) throw std::invalid_argument("t");
      x.push_back(std::stod(xs, &used));
      if (used != xs.size()) throw std::invalid_argument("x");
    } catch (const std::exception&) {
      throw UsageError("observation CSV: malformed number on line " + std::to_string(lineno));
    }
  }
  if (x.size() < 2) throw UsageError("observation CSV needs at least two rows");
  const double T = t.back() - t.front();
  const double h = T / static_cast<double>(x.size() - 1);
  if (!(h > 0.0)) throw UsageError("observation CSV: times must increase");
  for (std::size_t j = 1; j < t.size(); ++j) {
    if (std::abs((t[j] - t[j - 1]) - h) > 1e-6 * h) {
      throw UsageError("observation CSV: times are not equidistant near line " + std::to_string(j + 2));
    }
  }
  return ObservationSeries::from_values(std::move(x), T);
}

}  // namespace sqmle
