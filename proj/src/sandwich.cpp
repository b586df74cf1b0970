#include "lagspec/sandwich.hpp"

#include <cmath>
#include <vector>

#include <lapacke.h>

#include "lagspec/errors.hpp"

namespace lagspec::qgf {

namespace {

constexpr double kPi = 3.141592653589793238462643383279503;
const Complex kI(0.0, 1.0);

// (1/T) bTr( cA [1 - r (G kron 1) cA]^{-1} ) for a structured G = (g, v).
// One dense 2T x 2T inversion per evaluation (LAPACK getrf/getri).
Matrix2c block_trace_term(const Eigen::MatrixXcd& A, double r, Complex g, Complex v) {
  const int T = static_cast<int>(A.rows());
  const int n = 2 * T;
  const Eigen::MatrixXcd Ah = A.adjoint();
  Eigen::MatrixXcd K(n, n);
  K.topLeftCorner(T, T) = -r * g * A;
  K.topRightCorner(T, T) = -r * (kI * std::conj(v)) * Ah;
  K.bottomLeftCorner(T, T) = -r * (kI * v) * A;
  K.bottomRightCorner(T, T) = -r * std::conj(g) * Ah;
  K.diagonal().array() += 1.0;

  std::vector<lapack_int> ipiv(n);
  int info = LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n,
                            reinterpret_cast<lapack_complex_double*>(K.data()), n,
                            ipiv.data());
  if (info == 0) {
    info = LAPACKE_zgetri(LAPACK_COL_MAJOR, n,
                          reinterpret_cast<lapack_complex_double*>(K.data()), n,
                          ipiv.data());
  }
  if (info != 0 || !K.allFinite()) {
    throw SingularityError("block_trace_term: singular inner matrix");
  }

  Matrix2c out;
  out(0, 0) = A.cwiseProduct(K.topLeftCorner(T, T).transpose()).sum() / static_cast<double>(T);
  out(0, 1) = A.cwiseProduct(K.topRightCorner(T, T).transpose()).sum() / static_cast<double>(T);
  out(1, 0) = Ah.cwiseProduct(K.bottomLeftCorner(T, T).transpose()).sum() / static_cast<double>(T);
  out(1, 1) = Ah.cwiseProduct(K.bottomRightCorner(T, T).transpose()).sum() / static_cast<double>(T);
  return out;
}

struct PointSolver {
  const Eigen::MatrixXcd& A_eff;  // scale*T*A so the plain (1/T) form applies
  double r;
  Complex z;
  double w;

  Eigen::Vector4d residual(const Eigen::Vector4d& x) const {
    const Complex g(x[0], x[1]);
    const Complex v(x[2], x[3]);
    const Matrix2c sigma = block_trace_term(A_eff, r, g, v);
    Matrix2c Q;
    Q << z, kI * w, kI * w, std::conj(z);
    Matrix2c G;
    G << g, kI * std::conj(v), kI * v, std::conj(g);
    const Matrix2c R = (Q - sigma) * G - Matrix2c::Identity();
    const Complex r11 = R(0, 0);
    const Complex r21 = R(1, 0) / kI;
    return {r11.real(), r11.imag(), r21.real(), r21.imag()};
  }

  Matrix2c fixed_point_map(Complex g, Complex v) const {
    const Matrix2c sigma = block_trace_term(A_eff, r, g, v);
    Matrix2c Q;
    Q << z, kI * w, kI * w, std::conj(z);
    return (Q - sigma).inverse();
  }
};

Eigen::Matrix4d fd_jacobian(const PointSolver& ps, const Eigen::Vector4d& x,
                            const Eigen::Vector4d& r0) {
  Eigen::Matrix4d jac;
  for (int j = 0; j < 4; ++j) {
    const double h = 1e-7 * (1.0 + std::abs(x[j]));
    Eigen::Vector4d xp = x;
    xp[j] += h;
    jac.col(j) = (ps.residual(xp) - r0) / h;
  }
  return jac;
}

}  // namespace

ContinuationSchedule ContinuationSchedule::standard() {
  ContinuationSchedule s;
  for (double w = 1e-1; w > 1e-7; w *= 0.5) s.w_values.push_back(w);
  s.w_values.push_back(s.w_values.back() * 0.5);  // land below 1e-7
  return s;
}

void ContinuationSchedule::validate() const {
  if (w_values.empty()) throw UsageError("ContinuationSchedule: empty path");
  for (size_t i = 0; i + 1 < w_values.size(); ++i) {
    if (w_values[i + 1] >= w_values[i] || w_values[i] <= 0.0) {
      throw UsageError("ContinuationSchedule: w values must be strictly decreasing and positive");
    }
  }
  if (w_values.back() > 1e-6) {
    throw UsageError("ContinuationSchedule: final w must be <= 1e-6");
  }
}

Matrix2c quaternionic_moment_gf(const Eigen::MatrixXcd& A, const Matrix2c& Q) {
  const int T = static_cast<int>(A.rows());
  if (T < 1 || A.cols() != T) throw UsageError("quaternionic_moment_gf: A must be square");
  const Eigen::MatrixXcd Ah = A.adjoint();
  // (Q kron 1) cA has blocks Q_ab * A^(b) with A^(1) = A, A^(2) = A^dag
  Eigen::MatrixXcd K(2 * T, 2 * T);
  K.topLeftCorner(T, T) = -Q(0, 0) * A;
  K.topRightCorner(T, T) = -Q(0, 1) * Ah;
  K.bottomLeftCorner(T, T) = -Q(1, 0) * A;
  K.bottomRightCorner(T, T) = -Q(1, 1) * Ah;
  K.diagonal().array() += 1.0;

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(K);
  const Eigen::MatrixXcd inv = lu.inverse();
  if (!inv.allFinite()) {
    throw SingularityError("quaternionic_moment_gf: 1 - (Q kron 1) cA is singular");
  }
  Matrix2c out;
  out(0, 0) = (A * inv.topLeftCorner(T, T)).trace() / static_cast<double>(T);
  out(0, 1) = (A * inv.topRightCorner(T, T)).trace() / static_cast<double>(T);
  out(1, 0) = (Ah * inv.bottomLeftCorner(T, T)).trace() / static_cast<double>(T);
  out(1, 1) = (Ah * inv.bottomRightCorner(T, T)).trace() / static_cast<double>(T);
  return out;
}

Complex extract_mixed_moment(const Eigen::MatrixXcd& A, const Word& word) {
  const int n = static_cast<int>(word.size());
  if (n < 1) throw UsageError("extract_mixed_moment: empty word");
  for (int a : word) {
    if (a != 0 && a != 1) throw UsageError("extract_mixed_moment: letters must be 0 or 1");
  }
  const int row = word.front();
  const int col = word.back();

  // multi-degree of the target monomial over the four entries of Q
  int deg[2][2] = {{0, 0}, {0, 0}};
  for (int i = 0; i + 1 < n; ++i) ++deg[word[i]][word[i + 1]];

  // evaluation radius keeping the (Q kron 1) cA series convergent and aliased
  // orders suppressed below ~1e-10
  const double anorm = std::max(1.0, A.operatorNorm());
  const double radius = 0.05 / anorm;

  struct Dim {
    int a, b, size;
  };
  std::vector<Dim> dims;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      if (deg[a][b] > 0) dims.push_back({a, b, deg[a][b] + 8});
    }
  }

  long total = 1;
  for (const Dim& d : dims) total *= d.size;

  Complex acc(0.0, 0.0);
  std::vector<int> idx(dims.size(), 0);
  for (long it = 0; it < total; ++it) {
    long rem = it;
    Matrix2c Q = Matrix2c::Zero();
    Complex phase_inv(1.0, 0.0);
    for (size_t k = 0; k < dims.size(); ++k) {
      const int j = static_cast<int>(rem % dims[k].size);
      rem /= dims[k].size;
      const double ang = 2.0 * kPi * j / dims[k].size;
      Q(dims[k].a, dims[k].b) = radius * Complex(std::cos(ang), std::sin(ang));
      const int kdeg = deg[dims[k].a][dims[k].b];
      const double back = -ang * kdeg;
      phase_inv *= Complex(std::cos(back), std::sin(back));
    }
    const Matrix2c M = quaternionic_moment_gf(A, Q);
    acc += M(row, col) * phase_inv;
  }

  double scale = 1.0;
  for (const Dim& d : dims) scale *= d.size;
  for (const Dim& d : dims) scale *= std::pow(radius, deg[d.a][d.b]);
  return acc / scale;
}

QuaternionValue solve_sandwich(const SandwichProblem& prob, Complex z,
                               const ContinuationSchedule& sched,
                               const QuaternionValue* seed) {
  sched.validate();
  if (prob.r <= 0.0) throw UsageError("solve_sandwich: r must be positive");
  const int T = prob.T();
  if (T < 1 || prob.A.cols() != T) throw UsageError("solve_sandwich: A must be square");

  const Eigen::MatrixXcd A_eff = (prob.effective_scale() * T) * prob.A;

  Complex g = std::abs(z) > 1e-3 ? 1.0 / z : Complex(0.0, -1.0);
  Complex v(0.2, 0.0);
  if (seed) {
    g = seed->g;
    v = std::abs(seed->v) > 1e-3 ? seed->v : Complex(0.2, 0.0);
  }
  double last_converged_w = -1.0;

  // the Jacobian w.r.t. (g, v) barely depends on w, so it survives the whole
  // continuation path modulo Broyden updates and stall refreshes
  Eigen::Matrix4d jac;
  bool have_jac = false;

  for (const double w : sched.w_values) {
    PointSolver ps{A_eff, prob.r, z, w};
    Eigen::Vector4d x{g.real(), g.imag(), v.real(), v.imag()};
    Eigen::Vector4d res = ps.residual(x);
    double rn = res.cwiseAbs().maxCoeff();
    // the phase of v is gauge in the w -> 0 limit; its residual direction
    // scales like w and cannot be driven below the finite-difference noise
    // floor, so the per-step acceptance carries a w-proportional allowance.
    // Intermediate w steps only have to keep the iterate in the next basin,
    // so they accept at a looser gate than the final one.
    const bool final_step = w == sched.w_values.back();
    const double accept_tol =
        std::max({sched.step_tol, 3e-4 * w * (1.0 + x.cwiseAbs().maxCoeff()),
                  final_step ? 0.0 : 1e-8});

    // damped fixed point into the Newton basin -- only from a cold start;
    // with a carried Jacobian, Newton absorbs the w shift directly
    if (!have_jac) {
      for (int it = 0; it < 60 && rn > 1e-3; ++it) {
        const Matrix2c Gn = ps.fixed_point_map(Complex(x[0], x[1]), Complex(x[2], x[3]));
        const Complex gn = Gn(0, 0);
        const Complex vn = Gn(1, 0) / kI;
        x[0] = 0.5 * x[0] + 0.5 * gn.real();
        x[1] = 0.5 * x[1] + 0.5 * gn.imag();
        x[2] = 0.5 * x[2] + 0.5 * vn.real();
        x[3] = 0.5 * x[3] + 0.5 * vn.imag();
        res = ps.residual(x);
        rn = res.cwiseAbs().maxCoeff();
      }
    }

    if (!have_jac) {
      jac = fd_jacobian(ps, x, res);
      have_jac = true;
    }
    bool ok = rn <= accept_tol;
    bool jac_fresh = false;
    for (int it = 0; it < sched.max_iter && !ok; ++it) {
      // try the plain quasi-Newton step, then Levenberg-Marquardt ridges; the
      // w -> 0 limit leaves a soft phase mode that makes the Jacobian nearly
      // singular, which plain solves handle poorly
      Eigen::Vector4d xn, res_new;
      double rn_new = rn;
      bool improved = false;
      const double jn = jac.norm() + 1e-300;
      for (double mu : {0.0, 1e-8, 1e-5, 1e-2, 1.0}) {
        Eigen::Vector4d step;
        if (mu == 0.0) {
          step = jac.colPivHouseholderQr().solve(-res);
        } else {
          const Eigen::Matrix4d lhs =
              jac.transpose() * jac + (mu * jn * jn) * Eigen::Matrix4d::Identity();
          step = lhs.ldlt().solve(-jac.transpose() * res);
        }
        if (!step.allFinite()) continue;
        double lambda = 1.0;
        for (int bt = 0; bt < 6; ++bt) {
          xn = x + lambda * step;
          res_new = ps.residual(xn);
          rn_new = res_new.cwiseAbs().maxCoeff();
          if (rn_new < rn) {
            improved = true;
            break;
          }
          lambda *= 0.5;
        }
        if (improved) break;
      }
      if (!improved && !jac_fresh) {
        jac = fd_jacobian(ps, x, res);
        jac_fresh = true;
        continue;
      }
      if (!improved) {
        // damped fixed-point rescue: slow but robustly contracting here
        bool rescued = false;
        double best_rn = rn;
        int since_best = 0;
        for (int fp = 0; fp < 120 && rn > accept_tol; ++fp) {
          const Matrix2c Gn = ps.fixed_point_map(Complex(x[0], x[1]), Complex(x[2], x[3]));
          const Complex gn = Gn(0, 0);
          const Complex vn = Gn(1, 0) / kI;
          Eigen::Vector4d xf{0.5 * x[0] + 0.5 * gn.real(), 0.5 * x[1] + 0.5 * gn.imag(),
                             0.5 * x[2] + 0.5 * vn.real(), 0.5 * x[3] + 0.5 * vn.imag()};
          const Eigen::Vector4d rf = ps.residual(xf);
          const double rfn = rf.cwiseAbs().maxCoeff();
          x = xf;
          res = rf;
          rn = rfn;
          rescued = true;
          if (rfn < 0.9 * best_rn) {
            best_rn = rfn;
            since_best = 0;
          } else if (++since_best > 15) {
            break;
          }
        }
        ok = rn <= accept_tol;
        if (!ok && rescued) jac = fd_jacobian(ps, x, res);
        if (!rescued) break;
        continue;
      }
      const Eigen::Vector4d dx = xn - x;
      const Eigen::Vector4d dr = res_new - res;
      const double denom = dx.squaredNorm();
      if (denom > 0.0) jac += (dr - jac * dx) * dx.transpose() / denom;
      jac_fresh = false;
      x = xn;
      res = res_new;
      rn = rn_new;
      ok = rn <= accept_tol;
    }
    if (!ok) {
      throw ConvergenceError(
          "solve_sandwich: continuation failed at w = " + std::to_string(w) +
              " (last converged w = " + std::to_string(last_converged_w) + ")",
          {x[0], x[1], x[2], x[3]}, rn);
    }
    g = Complex(x[0], x[1]);
    v = Complex(x[2], x[3]);
    last_converged_w = w;
  }

  QuaternionValue out;
  out.g = g;
  out.v = v;
  out.final_w = sched.w_values.back();
  out.inside = std::abs(v) > 10.0 * out.final_w;
  if (!out.inside) out.v = 0.0;
  return out;
}

double density_from_field(const std::function<Complex(Complex)>& g, Complex z0, double h) {
  auto estimate = [&](double hh) {
    const Complex dgdx = (g(z0 + hh) - g(z0 - hh)) / (2.0 * hh);
    const Complex dgdy = (g(z0 + kI * hh) - g(z0 - kI * hh)) / (2.0 * hh);
    const Complex dzbar = 0.5 * (dgdx + kI * dgdy);
    return dzbar.real() / kPi;  // d/dzbar g is real for a density field
  };
  const double rho_h = estimate(h);
  const double rho_h2 = estimate(0.5 * h);
  if (std::abs(rho_h - rho_h2) > 0.05 * std::max(std::abs(rho_h2), 0.05)) {
    throw NumericalError("density_from_field: derivative unstable under refinement; grid too coarse");
  }
  return rho_h2;
}

double density_radial(const std::function<double(double)>& f, double s, double h) {
  if (s <= 0.0) throw UsageError("density_radial: s must be positive");
  const double fp = (f(s + h) - f(s - h)) / (2.0 * h);
  return fp / (2.0 * kPi * s);
}

double overlap_from_field(double v_abs) { return v_abs * v_abs / kPi; }

SandwichCurve sandwich_radial_curve(const SandwichProblem& prob,
                                    const std::vector<double>& grid,
                                    const ContinuationSchedule& sched) {
  SandwichCurve curve;
  curve.grid = grid;
  const size_t n = grid.size();
  curve.f.resize(n);
  curve.rho.assign(n, 0.0);
  curve.overlap.resize(n);
  curve.inside.resize(n);

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return grid[a] > grid[b]; });

  QuaternionValue prev;
  bool have_prev = false;
  for (size_t idx : order) {
    const double s = grid[idx];
    const QuaternionValue val =
        solve_sandwich(prob, Complex(s, 0.0), sched, have_prev ? &prev : nullptr);
    prev = val;
    have_prev = true;
    curve.f[idx] = (val.g * Complex(s, 0.0)).real();
    curve.overlap[idx] = val.inside ? overlap_from_field(std::abs(val.v)) : 0.0;
    curve.inside[idx] = val.inside;
  }
  // radial shortcut on the sampled f
  for (size_t i = 0; i < n; ++i) {
    if (!curve.inside[i] || grid[i] <= 0.0) continue;
    const size_t lo = i > 0 ? i - 1 : i;
    const size_t hi = i + 1 < n ? i + 1 : i;
    if (hi == lo) continue;
    curve.rho[i] = (curve.f[hi] - curve.f[lo]) / (grid[hi] - grid[lo]) /
                   (2.0 * kPi * grid[i]);
  }
  return curve;
}

}  // namespace lagspec::qgf
