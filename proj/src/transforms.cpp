#include "lagspec/transforms.hpp"

#include <cmath>

#include "lagspec/errors.hpp"
#include "lagspec/quadrature.hpp"

namespace lagspec::frv {

namespace {

constexpr double kPi = 3.141592653589793238462643383279503;

void check_pole(Complex denom, const char* what) {
  if (std::abs(denom) < 1e-13) throw PoleError(std::string(what) + ": evaluated at a pole");
}

// sqrt((z-a)(z-b)) with the cut on [a, b] and branch ~ z at large |z|
Complex cut_sqrt(Complex z, double a, double b) {
  return std::sqrt(z - a) * std::sqrt(z - b);
}

}  // namespace

Complex wishart_transforms(TransformKind kind, Complex z, double r) {
  if (r <= 0.0) throw UsageError("wishart_transforms: r must be positive");
  switch (kind) {
    case TransformKind::r_transform: {
      const Complex d = 1.0 - r * z;
      check_pole(d, "R_W");
      return 1.0 / d;
    }
    case TransformKind::s_transform: {
      const Complex d = 1.0 + r * z;
      check_pole(d, "S_W");
      return 1.0 / d;
    }
    case TransformKind::n_transform: {
      check_pole(z, "N_W");
      return (1.0 + z) * (1.0 + r * z) / z;
    }
    case TransformKind::blue: {
      const Complex d = 1.0 - r * z;
      check_pole(d, "B_W");
      check_pole(z, "B_W");
      return 1.0 / d + 1.0 / z;
    }
    case TransformKind::green:
    case TransformKind::moment_gf: {
      check_pole(z, "G_W");
      // z r G^2 + (1 - r - z) G + 1 = 0, Marchenko-Pastur edges (1 +- sqrt r)^2
      const double sr = std::sqrt(r);
      const Complex g =
          (z + r - 1.0 - cut_sqrt(z, (1.0 - sr) * (1.0 - sr), (1.0 + sr) * (1.0 + sr))) /
          (2.0 * z * r);
      return kind == TransformKind::green ? g : z * g - 1.0;
    }
  }
  throw UsageError("wishart_transforms: unknown kind");
}

Complex antiwishart_transforms(TransformKind kind, Complex z, double r) {
  if (r <= 0.0) throw UsageError("antiwishart_transforms: r must be positive");
  switch (kind) {
    case TransformKind::r_transform: {
      const Complex d = r - z;
      check_pole(d, "R_aW");
      return r / d;
    }
    case TransformKind::s_transform: {
      const Complex d = r + z;
      check_pole(d, "S_aW");
      return r / d;
    }
    case TransformKind::n_transform: {
      check_pole(z, "N_aW");
      return (1.0 + z) * (r + z) / (r * z);
    }
    case TransformKind::blue: {
      const Complex d = r - z;
      check_pole(d, "B_aW");
      check_pole(z, "B_aW");
      return r / d + 1.0 / z;
    }
    case TransformKind::green:
    case TransformKind::moment_gf: {
      check_pole(z, "G_aW");
      // z G^2 - (1 - r + z r) G + r = 0; support of the nonzero part is the
      // Marchenko-Pastur interval rescaled by 1/r, plus a (1-r) atom at 0.
      const double sr = std::sqrt(r);
      const Complex w = cut_sqrt(r * z, (1.0 - sr) * (1.0 - sr), (1.0 + sr) * (1.0 + sr));
      const Complex g = (1.0 - r + r * z - w) / (2.0 * z);
      return kind == TransformKind::green ? g : z * g - 1.0;
    }
  }
  throw UsageError("antiwishart_transforms: unknown kind");
}

TransformEval evaluate_wishart(TransformKind kind, Complex z, double r) {
  return {kind, z, wishart_transforms(kind, z, r)};
}

TransformEval evaluate_antiwishart(TransformKind kind, Complex z, double r) {
  return {kind, z, antiwishart_transforms(kind, z, r)};
}

Complex free_add_projectors(Complex z) {
  return 1.0 / cut_sqrt(z, -1.0, 1.0);
}

double arcsine_density(double lambda) {
  if (std::abs(lambda) >= 1.0) return 0.0;
  return 1.0 / (kPi * std::sqrt(1.0 - lambda * lambda));
}

Complex free_multiply_projectors(double alpha, Complex z) {
  if (alpha <= 0.0 || alpha >= 1.0) {
    throw UsageError("free_multiply_projectors: alpha must lie in (0, 1)");
  }
  const double b = 4.0 * alpha * (1.0 - alpha);
  const Complex d = z - 1.0;
  if (std::abs(d) < 1e-13) {
    // removable point for alpha < 1/2 (pole, i.e. an atom at 1, otherwise)
    if (alpha < 0.5) return alpha * alpha / (1.0 - 2.0 * alpha);
    throw PoleError("free_multiply_projectors: z = 1 sits on the atom");
  }
  // (z-1) M^2 + (z - 2 alpha) M - alpha^2 = 0; + branch has M ~ alpha^2/z.
  return (2.0 * alpha - z + cut_sqrt(z, 0.0, b)) / (2.0 * d);
}

Complex whitened_lag_moment_gf(Complex z, double r) {
  return free_multiply_projectors(r, z);
}

double AtomicMeasure::atom_mass() const {
  double m = 0.0;
  for (const Atom& a : atoms) m += a.weight;
  return m;
}

double AtomicMeasure::total_mass(double tol) const {
  double m = atom_mass();
  if (continuous && support_hi > support_lo) {
    m += integrate(continuous, support_lo, support_hi, tol);
  }
  return m;
}

double AtomicMeasure::cdf(double x, double tol) const {
  double m = 0.0;
  for (const Atom& a : atoms) {
    if (a.location <= x) m += a.weight;
  }
  if (continuous && support_hi > support_lo && x > support_lo) {
    m += integrate(continuous, support_lo, std::min(x, support_hi), tol);
  }
  return m;
}

AtomicMeasure free_jacobi_measure(double alpha) {
  if (alpha <= 0.0 || alpha >= 1.0) {
    throw UsageError("free_jacobi_measure: alpha must lie in (0, 1)");
  }
  const double b = 4.0 * alpha * (1.0 - alpha);
  AtomicMeasure m;
  m.atoms = {{0.0, 1.0 - alpha}, {1.0, std::max(2.0 * alpha - 1.0, 0.0)}};
  m.support_lo = 0.0;
  m.support_hi = b;
  m.continuous = [b](double lam) {
    if (lam <= 0.0 || lam >= b) return 0.0;
    return std::sqrt(b - lam) / (2.0 * kPi * std::sqrt(lam) * (1.0 - lam));
  };
  return m;
}

double density_from_green(const std::function<Complex(Complex)>& green, double lambda,
                          double eps) {
  const auto rho = [&](double e) {
    return -green(Complex(lambda, e)).imag() / kPi;
  };
  const double r1 = rho(eps);
  const double r2 = rho(2.0 * eps);
  return 2.0 * r1 - r2;  // first-order Richardson in eps
}

}  // namespace lagspec::frv
