#pragma once

#include <cmath>
#include <limits>

#include "lagspec/errors.hpp"

namespace lagspec {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = false;
};

/// Tanh-sinh (double exponential) quadrature on (a, b).
///
/// Abscissas cluster double-exponentially at both endpoints, so integrable
/// endpoint singularities (x^-1/2 and friends) converge at full rate. The
/// integrand is never evaluated at the endpoints themselves.
template <typename F>
QuadratureResult tanh_sinh(const F& f, double a, double b, double tol = 1e-9,
                           int max_level = 12) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const double pi_half = 1.5707963267948966;

  auto node = [&](double t, double& x, double& w) {
    const double sh = std::sinh(t);
    const double u = pi_half * sh;
    const double c = std::cosh(u);
    x = std::tanh(u);                       // in (-1, 1)
    w = pi_half * std::cosh(t) / (c * c);   // dx/dt
  };

  // level 0: trapezoid with h = 1 over t in [-t_max, t_max]
  const double t_max = 3.8;  // tanh(pi/2 sinh 3.8) == 1 to double precision
  double h = 1.0;
  double sum = 0.0;
  {
    double x, w;
    node(0.0, x, w);
    sum = f(mid + half * x) * w;
    for (double t = h; t <= t_max; t += h) {
      node(t, x, w);
      const double xl = mid - half * x, xr = mid + half * x;
      if (x < 1.0) sum += (f(xl) + f(xr)) * w;
    }
  }
  double prev = sum * h * half;

  for (int level = 1; level <= max_level; ++level) {
    h *= 0.5;
    double add = 0.0;
    for (double t = h; t <= t_max; t += 2.0 * h) {
      double x, w;
      node(t, x, w);
      if (x >= 1.0) continue;
      add += (f(mid - half * x) + f(mid + half * x)) * w;
    }
    const double cur = 0.5 * prev + add * h * half;
    const double err = std::abs(cur - prev);
    prev = cur;
    const double scale = std::max(1.0, std::abs(cur));
    if (level >= 3 && err <= tol * scale) {
      return {cur, err, true};
    }
  }
  return {prev, std::numeric_limits<double>::quiet_NaN(), false};
}

/// Same, but throws ConvergenceError when the tolerance is not met.
template <typename F>
double integrate(const F& f, double a, double b, double tol = 1e-9) {
  const QuadratureResult q = tanh_sinh(f, a, b, tol);
  if (!q.converged) {
    throw ConvergenceError("quadrature did not converge on [" + std::to_string(a) + ", " +
                               std::to_string(b) + "]",
                           {q.value}, q.error_estimate);
  }
  return q.value;
}

}  // namespace lagspec
