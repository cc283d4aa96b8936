#pragma once

// Adaptive Gauss-Kronrod integration over vector-valued integrands, plus
// Gauss-Legendre rules for fixed composite quadrature.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <span>
#include <vector>

#include "sqmle/errors.hpp"

namespace sqmle::quad {

template <std::size_t N>
struct ResultN {
  std::array<double, N> value{};
  double error = 0.0;  // max over components of |Kronrod - Gauss|
  int intervals = 0;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
};

namespace detail {

// QUADPACK qk21 abscissae (positive half) and weights.
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208067596419, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
// 10-point Gauss weights, paired with kXgk[1], kXgk[3], ..., kXgk[9].
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

template <std::size_t N>
struct Panel {
  double a, b;
  std::array<double, N> value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <std::size_t N, class F>
Panel<N> gk21(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  std::array<double, N> kron{};
  std::array<double, N> gauss{};
  const std::array<double, N> fc = f(c);
  for (std::size_t k = 0; k < N; ++k) kron[k] = kWgk[10] * fc[k];
  for (std::size_t i = 0; i < 10; ++i) {
    const double dx = r * kXgk[i];
    const std::array<double, N> f1 = f(c - dx);
    const std::array<double, N> f2 = f(c + dx);
    for (std::size_t k = 0; k < N; ++k) {
      const double s = f1[k] + f2[k];
      kron[k] += kWgk[i] * s;
      if (i % 2 == 1) gauss[k] += kWg[i / 2] * s;
    }
  }
  Panel<N> p{a, b, {}, 0.0};
  for (std::size_t k = 0; k < N; ++k) {
    p.value[k] = kron[k] * r;
    p.error = std::max(p.error, std::abs((kron[k] - gauss[k]) * r));
  }
  return p;
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (21-point) integration of a vector-valued
/// integrand over [breaks.front(), breaks.back()]. Interior breakpoints seed
/// the initial partition. The panel with the largest error estimate is
/// bisected until the summed error drops below abs_tol.
/// Throws NumericError (carrying the residual) if max_panels is exhausted.
template <std::size_t N, class F>
ResultN<N> integrate(F&& f, std::span<const double> breaks, double abs_tol,
                     int max_panels = 4000) {
  if (breaks.size() < 2) throw UsageError("quad::integrate: need at least two breakpoints");
  std::priority_queue<detail::Panel<N>> heap;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i] < breaks[i + 1])) continue;
    auto p = detail::gk21<N>(f, breaks[i], breaks[i + 1]);
    total_err += p.error;
    heap.push(p);
  }
  int panels = static_cast<int>(heap.size());
  while (total_err > abs_tol) {
    if (panels >= max_panels) {
      throw NumericError("adaptive quadrature did not converge", total_err);
    }
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(worst.a < mid && mid < worst.b)) {
      throw NumericError("adaptive quadrature: interval collapsed", total_err);
    }
    auto left = detail::gk21<N>(f, worst.a, mid);
    auto right = detail::gk21<N>(f, mid, worst.b);
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }
  // Sum smallest panels first for reproducible, slightly better rounding.
  std::vector<detail::Panel<N>> all;
  all.reserve(heap.size());
  while (!heap.empty()) {
    all.push_back(heap.top());
    heap.pop();
  }
  std::sort(all.begin(), all.end(),
            [](const auto& x, const auto& y) { return x.a < y.a; });
  ResultN<N> out;
  for (const auto& p : all) {
    for (std::size_t k = 0; k < N; ++k) out.value[k] += p.value[k];
  }
  out.error = std::max(total_err, 0.0);
  out.intervals = panels;
  return out;
}

/// Scalar convenience overload on [a, b].
template <class F>
Result integrate(F&& f, double a, double b, double abs_tol, int max_panels = 4000) {
  auto wrapped = [&f](double x) { return std::array<double, 1>{f(x)}; };
  const std::array<double, 2> br{a, b};
  auto r = integrate<1>(wrapped, br, abs_tol, max_panels);
  return {r.value[0], r.error, r.intervals};
}

/// Integral over [a, inf) through the map y = a + t / (1 - t).
template <std::size_t N, class F>
ResultN<N> integrate_to_infinity(F&& f, double a, double abs_tol, int max_panels = 4000) {
  auto mapped = [&f, a](double t) {
    const double s = 1.0 - t;
    const double jac = 1.0 / (s * s);
    auto v = f(a + t / s);
    for (auto& x : v) x *= jac;
    return v;
  };
  const std::array<double, 5> br{0.0, 0.5, 0.9, 0.99, 1.0};
  return integrate<N>(mapped, br, abs_tol, max_panels);
}

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule gauss_legendre(int n);

}  // namespace sqmle::quad
