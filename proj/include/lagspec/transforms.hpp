#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace lagspec::frv {

using Complex = std::complex<double>;

/// The transform catalogue for a spectral measure.
enum class TransformKind {
  green,        // G(z) = <(1/N) Tr (z - H)^{-1}>
  r_transform,  // cumulant generator, R(G(z)) + 1/G(z) = z
  s_transform,  // multiplicative, S(z) = (1+z)/(z N(z))
  n_transform,  // functional inverse of the moment gf, N(M(z)) = z
  blue,         // functional inverse of G, B(G(z)) = z
  moment_gf,    // M(z) = z G(z) - 1
};

/// One evaluated transform: kind, where it was evaluated, what came out.
struct TransformEval {
  TransformKind kind;
  Complex argument;
  Complex value;
};

/// Wishart (1/T) x x^dag, aspect r = N/T. Throws PoleError at the transform's
/// pole. The Green branch satisfies G ~ 1/z at infinity.
Complex wishart_transforms(TransformKind kind, Complex z, double r);

/// anti-Wishart (1/N) x^dag x. Duality: M_aW(z) = r M_W(r z).
Complex antiwishart_transforms(TransformKind kind, Complex z, double r);

TransformEval evaluate_wishart(TransformKind kind, Complex z, double r);
TransformEval evaluate_antiwishart(TransformKind kind, Complex z, double r);

/// Green's function of the free sum of two symmetric two-point projectors:
/// G(z) = 1/sqrt(z^2 - 1), branch with G ~ 1/z. z must be off the cut [-1, 1].
Complex free_add_projectors(Complex z);

/// Boundary density of free_add_projectors: 1/(pi sqrt(1 - lambda^2)) on (-1, 1).
double arcsine_density(double lambda);

/// Moment generating function of the free product of two rank-alpha
/// projectors: (z-1) M^2 + (z-2 alpha) M - alpha^2 = 0, branch with M -> 0 at
/// large z (i.e. G = (M+1)/z ~ 1/z).
Complex free_multiply_projectors(double alpha, Complex z);

/// The whitening benchmark is the same free-Jacobi machinery with alpha -> r.
Complex whitened_lag_moment_gf(Complex z, double r);

/// A measure as atoms + an optional continuous density on a support interval.
/// Downstream quadrature controls its own resolution.
struct AtomicMeasure {
  struct Atom {
    double location;
    double weight;
  };
  std::vector<Atom> atoms;
  std::function<double(double)> continuous;  // nullable
  double support_lo = 0.0;
  double support_hi = 0.0;

  double atom_mass() const;
  /// atoms + tanh-sinh quadrature of the continuous part
  double total_mass(double tol = 1e-10) const;
  /// mass of (-inf, x]: atoms below plus integrated continuous part
  double cdf(double x, double tol = 1e-10) const;
};

/// Spectral measure of the free product of two rank-alpha projectors:
/// (1-alpha) delta_0 + max(2 alpha - 1, 0) delta_1 + continuous part on
/// [0, 4 alpha (1-alpha)].
AtomicMeasure free_jacobi_measure(double alpha);

/// Boundary-value density from a Green's function: the Sochocki-Plemelj limit
/// -(1/pi) Im G(lambda + i eps), Richardson-extrapolated in eps.
double density_from_green(const std::function<Complex(Complex)>& green, double lambda,
                          double eps = 1e-8);

}  // namespace lagspec::frv
