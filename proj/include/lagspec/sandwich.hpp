#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

#include "lagspec/quaternion.hpp"

namespace lagspec::qgf {

/// The general problem Y = scale * X A X^dag with X an N x T complex Gaussian
/// data matrix (unit-variance entries), A an arbitrary T x T matrix and
/// r = N/T fixed. scale is 1/T for the plain sandwich, alpha/T for the lagged
/// Pearson estimator.
struct SandwichProblem {
  Eigen::MatrixXcd A;
  double r = 1.0;
  double scale = 0.0;  // <= 0 means 1/T

  int T() const { return static_cast<int>(A.rows()); }
  double effective_scale() const { return scale > 0.0 ? scale : 1.0 / T(); }
};

/// Regularization path |w| -> 0. Values must decrease strictly; the last one
/// must be <= 1e-6.
struct ContinuationSchedule {
  std::vector<double> w_values;
  double step_tol = 1e-11;
  int max_iter = 60;

  /// geometric from 1e-1 with ratio 1/2 until <= 1e-7
  static ContinuationSchedule standard();
  void validate() const;
};

/// Converged generalized Green's function value at one z.
struct QuaternionValue {
  Complex g{0.0, 0.0};
  Complex v{0.0, 0.0};
  bool inside = false;   // |v| > 10 w_final at the end of the path
  double final_w = 0.0;
};

/// Quaternionic moment generating function of a deterministic matrix:
///   M(Q) = (1/T) bTr( cA [ 1_{2T} - (Q kron 1_T) cA ]^{-1} ),
/// cA = diag(A, A^dag). Q may be any 2x2 complex matrix (its four entries act
/// as independent series variables). Throws SingularityError if the inner
/// matrix is not invertible.
Matrix2c quaternionic_moment_gf(const Eigen::MatrixXcd& A, const Matrix2c& Q);

/// A word in {X, X^dag} spelled as 0 (plain) / 1 (dagger).
using Word = std::vector<int>;

/// Coefficient extraction from the series of quaternionic_moment_gf: for the
/// word (a_1 .. a_n) this reads the coefficient of
/// Q_{a1 a2} Q_{a2 a3} ... Q_{a n-1 a n} in component M_{a1 an} by a
/// multidimensional Cauchy (roots-of-unity) quadrature over the participating
/// entries of Q. Matches (1/T) Tr A^{a1} ... A^{an} to ~1e-10 for ||A|| ~ 1.
Complex extract_mixed_moment(const Eigen::MatrixXcd& A, const Word& word);

/// Solves [Q - scale*T*(1/T) bTr(...)] G = 1_2 for G = (g, v) by continuation
/// in w: damped fixed point far from the solution, Broyden-refreshed Newton
/// near it, warm-started across w steps. Outside the spectrum v -> 0 and g is
/// holomorphic; inside, |v| stays finite as w -> 0. Throws ConvergenceError
/// (mentioning the last converged w) when a step fails. An optional seed (e.g.
/// the value at a neighbouring z) skips most of the fixed-point phase.
QuaternionValue solve_sandwich(const SandwichProblem& prob, Complex z,
                               const ContinuationSchedule& sched = ContinuationSchedule::standard(),
                               const QuaternionValue* seed = nullptr);

/// Density from a sampled Green field: rho = (1/pi) d/dconj(z) g by central
/// finite differences at spacing h, accepted only if the h -> h/2 refinement
/// moves the estimate by less than 5%.
double density_from_field(const std::function<Complex(Complex)>& g, Complex z0, double h);

/// Radial shortcut for rotationally symmetric fields: rho = f'(s)/(2 pi s),
/// f = g z sampled along a ray, derivative by central differences at spacing h.
double density_radial(const std::function<double(double)>& f, double s, double h);

/// O(z) = |v|^2 / pi at the converged |w| -> 0 value.
double overlap_from_field(double v_abs);

/// Radial sweep of solve_sandwich along z = s > 0 (descending warm starts).
struct SandwichCurve {
  std::vector<double> grid;
  std::vector<double> f;        // Re(g z)
  std::vector<double> rho;      // radial shortcut on the grid
  std::vector<double> overlap;  // |v|^2/pi inside, 0 outside
  std::vector<bool> inside;
};
SandwichCurve sandwich_radial_curve(const SandwichProblem& prob,
                                    const std::vector<double>& grid,
                                    const ContinuationSchedule& sched =
                                        ContinuationSchedule::standard());

}  // namespace lagspec::qgf
