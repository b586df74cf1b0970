#pragma once

#include <vector>

#include "lagspec/radial.hpp"

namespace lagspec::lag {

/// Double-scaling lag parameters: beta = tau/T as an exact rational p/q,
/// alpha = 1/(1-beta), M = ceil(1/beta). beta = 0 (p = 0) is the unit-lag
/// limit, where M is unbounded.
struct LagLaw {
  double r = 1.0;
  int p = 0;
  int q = 1;

  LagLaw() = default;
  LagLaw(double r, int p, int q);  // reduces p/q, validates 0 <= p/q < 1

  double beta() const { return static_cast<double>(p) / q; }
  double alpha() const { return static_cast<double>(q) / (q - p); }
  /// ceil(1/beta), exact in integer arithmetic; INT_MAX sentinel at beta = 0
  int m_ceil() const;
  bool large_q() const { return q > 64; }  // block-trace cost grows with q
};

/// Radial CDF f(s) of the unit-lag matrix from
///   4 f^3 r^3 + 4 f^2 r^2 (1-r) + f r ((1-r)^2 - s^2) - s^2 = 0,
/// real branch with f(s_ext) = 1, f(s_int) = 0 for r <= 1 and 1 - 1/r for
/// r > 1 (zero modes included). Clamps outside the ring; *clamped reports it.
double unit_lag_cdf(double s, double r, bool* clamped = nullptr);

/// rho(s) = f'(s)/(2 pi s) by implicit differentiation; the z = 0 atom of
/// weight max((r-1)/r, 0) is *not* part of this continuous value.
double unit_lag_density(double s, double r);

/// O(s) = 1/(pi (2 f r^2 + r - r^2)) - f^2/(pi s^2) inside the ring, else 0.
double unit_lag_overlap(double s, double r);

/// Sweep of the unit-lag law (lagged convention, zero modes as F offset).
radial::RadialCurve unit_lag_curve(double r, const std::vector<double>& grid);

/// Closed forms at T = 2 tau: f from 4 f^2 r^2 + 2 f r (1-2r) - s^2 = 0,
/// rho = 1/(2 pi r sqrt((1-2r)^2 + 4 s^2)), O with the theta(sqrt(2r) - s)
/// cutoff. Outside s_ext = sqrt(2r) the values are zeroed and flagged.
struct HalfLagPoint {
  double f = 1.0;
  double rho = 0.0;
  double overlap = 0.0;
  bool inside = false;
};
HalfLagPoint half_lag_laws(double s, double r);

/// Numerical law for rational beta = p/q: the delay matrix reduces to a
/// shift-by-p block of size q, leaving two real equations in (f, u = |v|^2).
/// Solved by Newton with continuation in s seeded at the outer edge. Outside
/// the spectrum returns (1, 0).
struct DeepLagPoint {
  double f = 1.0;
  double u = 0.0;  // |v|^2; overlap = u/pi
  bool inside = false;
};
DeepLagPoint deep_lag_solve(const LagLaw& law, double s);

/// s_ext from the spectral-radius sum
///   sum_{k=1}^{M-1} (alpha r / s)^{2k} (1 - k beta) = r,
/// bisected to 1e-12; closed form sqrt(alpha r) whenever M = 2 (beta >= 1/2).
double deep_lag_radius(const LagLaw& law);
/// Same with floating beta (for radius-vs-beta sweeps); M = ceil(1/beta).
double deep_lag_radius(double r, double beta);

/// Sweep of the deep-lag law over an ascending grid (lagged convention).
radial::RadialCurve deep_lag_curve(const LagLaw& law, const std::vector<double>& grid);

}  // namespace lagspec::lag
