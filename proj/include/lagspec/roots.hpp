#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

namespace lagspec::roots {

using Complex = std::complex<double>;

/// Real polynomial, coefficients ascending in degree: p(x) = sum coeffs[k] x^k.
/// Closed-form solve paths exist up to degree 4.
struct PolyReal {
  std::vector<double> coeffs;

  /// Degree after trimming trailing (near-)zero leading coefficients relative
  /// to the largest coefficient magnitude.
  int degree() const;
  double eval(double x) const;
  Complex eval(Complex x) const;
  Complex deriv_eval(Complex x) const;
  double max_abs_coeff() const;
};

/// Discriminant of a degree-2/3/4 polynomial (0 for other degrees).
double discriminant(const PolyReal& p);

/// All complex roots of a cubic. Closed-form (trigonometric/Cardano) with a
/// companion-matrix fallback near root collisions; every root is polished by
/// Newton and real roots carry an exactly zero imaginary part. Roots are
/// sorted by (Re, Im). A degenerate leading coefficient falls back to the
/// lower-degree solve rather than returning a wrong-degree answer.
std::vector<Complex> solve_cubic(const PolyReal& p);

/// All complex roots of a quartic (Ferrari via the resolvent cubic), same
/// polish/ordering/fallback contract as solve_cubic.
std::vector<Complex> solve_quartic(const PolyReal& p);

/// Both of the above, dispatched on degree (handles 1 and 2 as well).
std::vector<Complex> solve_poly(const PolyReal& p);

/// |Im| <= 1e-9 (1 + |Re|): treat as a real root (imaginary dust from the
/// closed forms).
bool is_real_root(Complex root);

/// How a caller singles out the physical root among candidates.
struct BranchSelector {
  enum class Mode { continuity, range, asymptotic };
  Mode mode = Mode::continuity;

  // continuity: root nearest previous_root, rejecting jumps above max_jump
  Complex previous_root{0.0, 0.0};
  double max_jump = 1e300;

  // range: real roots inside [lo, hi]
  double lo = 0.0;
  double hi = 0.0;
  bool monotonic = false;

  // asymptotic: root nearest a target value (e.g. a large-|z| expansion)
  Complex target{0.0, 0.0};

  static BranchSelector continuity(Complex previous, double max_jump = 1e300);
  static BranchSelector range(double lo, double hi, bool monotonic = false);
  static BranchSelector asymptotic(Complex target);
};

/// The unique admissible root under the selector. Ties between equally close
/// candidates break toward the larger real part (deterministic). Throws
/// BranchLostError (carrying all candidates) when nothing is admissible.
Complex select_branch(const std::vector<Complex>& roots, const BranchSelector& sel);

/// Damped Newton for small dense systems. The Jacobian is built from central
/// finite differences with step 1e-7 (1 + |x_i|). Converges when
/// ||residual||_inf <= tol; otherwise throws ConvergenceError carrying the
/// last iterate and residual norm.
Eigen::VectorXd newton_system(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual_fn,
    Eigen::VectorXd x0, double tol = 1e-12, int max_iter = 60);

}  // namespace lagspec::roots
