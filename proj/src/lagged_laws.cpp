#include "lagspec/lagged_laws.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <numeric>

#include "lagspec/errors.hpp"
#include "lagspec/roots.hpp"

namespace lagspec::lag {

namespace {

constexpr double kPi = 3.141592653589793238462643383279503;

roots::PolyReal unit_cubic(double s, double r) {
  const double u = 1.0 - r;
  return {{-s * s, r * (u * u - s * s), 4.0 * r * r * u, 4.0 * r * r * r}};
}

double unit_dres_df(double f, double s, double r) {
  const double u = 1.0 - r;
  return 12.0 * f * f * r * r * r + 8.0 * f * r * r * u + r * (u * u - s * s);
}

double unit_cdf_walk(double s_target, double r) {
  const radial::SupportRing ring = radial::spectral_radii(r);
  double f = 1.0;
  const int steps = 80;
  for (int k = 1; k <= steps; ++k) {
    const double sk = ring.s_ext + (s_target - ring.s_ext) * k / steps;
    const auto rts = roots::solve_cubic(unit_cubic(sk, r));
    f = roots::select_branch(rts, roots::BranchSelector::continuity(f, 0.5)).real();
  }
  return std::clamp(f, 0.0, 1.0);
}

// Two-equation residual of the Kronecker-reduced deep-lag system in (f, u).
// All blocks are real q x q matrices; u may go slightly negative during
// Newton excursions (the functions are rational in u).
struct DeepSystem {
  double r;
  int p, q;
  Eigen::MatrixXd S;   // shift-by-p block
  Eigen::MatrixXd St;  // transpose
  double a;            // alpha * r
  double c;            // 1/(q - p)

  explicit DeepSystem(const LagLaw& law)
      : r(law.r), p(law.p), q(law.q) {
    S = Eigen::MatrixXd::Zero(q, q);
    for (int i = 0; i + p < q; ++i) S(i, i + p) = 1.0;
    St = S.transpose();
    a = law.alpha() * r;
    c = 1.0 / (q - p);
  }

  // sigma and h = c*a*Tr(W Inv) at (f, u)
  void terms(double f, double u, double s, double& sigma, double& h) const {
    const double g = f / s;
    const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(q, q) - a * g * S;
    const Eigen::MatrixXd Sp = Eigen::MatrixXd::Identity(q, q) - a * g * St;
    const Eigen::MatrixXd W = St * Sp.partialPivLu().solve(S);
    const Eigen::MatrixXd schur = P + (a * a * u) * W;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(schur);
    const Eigen::MatrixXd invS = lu.solve(S);  // schur^{-1} S has the traces we need
    const Eigen::MatrixXd invW = lu.solve(W);
    sigma = c * invS.trace();
    h = c * a * invW.trace();
  }

  Eigen::Vector2d residual(double f, double u, double s) const {
    double sigma, h;
    terms(f, u, s, sigma, h);
    return {(s - sigma) * f / s + h * u - 1.0, (s - sigma) - h * f / s};
  }
};

}  // namespace

LagLaw::LagLaw(double r_, int p_, int q_) : r(r_), p(p_), q(q_) {
  if (r <= 0.0) throw UsageError("LagLaw: r must be positive");
  if (q < 1 || p < 0 || p >= q) throw UsageError("LagLaw: need 0 <= p/q < 1");
  const int g = std::gcd(p, q);
  if (g > 1) {
    p /= g;
    q /= g;
  }
  if (p == 0) q = 1;
}

int LagLaw::m_ceil() const {
  if (p == 0) return INT_MAX;
  return (q + p - 1) / p;
}

double unit_lag_cdf(double s, double r, bool* clamped) {
  if (s < 0.0) throw UsageError("unit_lag_cdf: s must be nonnegative");
  const radial::SupportRing ring = radial::spectral_radii(r);
  if (clamped) *clamped = false;
  if (s >= ring.s_ext) {
    if (clamped) *clamped = s > ring.s_ext * (1.0 + 1e-12);
    return 1.0;
  }
  if (r > 1.0 && s <= ring.s_int) {
    // zero modes at the origin keep the CDF at 1 - 1/r throughout the hole
    if (clamped) *clamped = s < ring.s_int * (1.0 - 1e-12);
    return 1.0 - 1.0 / r;
  }
  if (s == 0.0) return std::max(1.0 - 1.0 / r, 0.0);
  return unit_cdf_walk(s, r);
}

double unit_lag_density(double s, double r) {
  const radial::SupportRing ring = radial::spectral_radii(r);
  if (s <= ring.s_int || s >= ring.s_ext || s <= 0.0) return 0.0;
  const double f = unit_lag_cdf(s, r);
  const double dres = unit_dres_df(f, s, r);
  // cancellation guard: dP/df tiny against its own terms marks a root collision
  const double u = 1.0 - r;
  const double terms = 12.0 * f * f * r * r * r + std::abs(8.0 * f * r * r * u) +
                       r * (u * u + s * s) + 1e-300;
  if (std::abs(dres) < 1e-13 * terms) {
    throw SingularityError("unit_lag_density: vanishing dP/df at s = " + std::to_string(s));
  }
  const double fp = 2.0 * s * (f * r + 1.0) / dres;
  return fp / (2.0 * kPi * s);
}

double unit_lag_overlap(double s, double r) {
  const radial::SupportRing ring = radial::spectral_radii(r);
  if (s <= ring.s_int || s >= ring.s_ext || s <= 0.0) return 0.0;
  const double f = unit_lag_cdf(s, r);
  return 1.0 / (kPi * (2.0 * f * r * r + r - r * r)) - f * f / (kPi * s * s);
}

radial::RadialCurve unit_lag_curve(double r, const std::vector<double>& grid) {
  radial::RadialCurve curve;
  curve.r = r;
  curve.beta = 0.0;
  curve.convention = radial::RadialConvention::lagged;
  curve.zero_mode_weight = std::max(1.0 - 1.0 / r, 0.0);
  curve.grid = grid;
  const size_t n = grid.size();
  curve.F.resize(n);
  curve.rho.assign(n, 0.0);
  curve.O.assign(n, 0.0);

  const radial::SupportRing ring = radial::spectral_radii(r);
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return grid[a] > grid[b]; });

  double f = 1.0;
  bool seeded = false;
  for (size_t idx : order) {
    const double s = grid[idx];
    if (s >= ring.s_ext) {
      curve.F[idx] = 1.0;
      if (s > ring.s_ext * (1.0 + 1e-12)) ++curve.clamped_points;
      continue;
    }
    if ((r > 1.0 && s <= ring.s_int) || s <= 0.0) {
      curve.F[idx] = curve.zero_mode_weight;
      ++curve.clamped_points;
      continue;
    }
    if (!seeded) {
      f = unit_cdf_walk(s, r);
      seeded = true;
    } else {
      const auto rts = roots::solve_cubic(unit_cubic(s, r));
      f = std::clamp(
          roots::select_branch(rts, roots::BranchSelector::continuity(f, 0.5)).real(), 0.0,
          1.0);
    }
    curve.F[idx] = f;
    const double dres = unit_dres_df(f, s, r);
    if (std::abs(dres) > 1e-12) {
      curve.rho[idx] = (2.0 * s * (f * r + 1.0) / dres) / (2.0 * kPi * s);
    }
    curve.O[idx] = 1.0 / (kPi * (2.0 * f * r * r + r - r * r)) - f * f / (kPi * s * s);
  }
  return curve;
}

HalfLagPoint half_lag_laws(double s, double r) {
  if (r <= 0.0) throw UsageError("half_lag_laws: r must be positive");
  if (s < 0.0) throw UsageError("half_lag_laws: s must be nonnegative");
  const double s_ext = std::sqrt(2.0 * r);
  HalfLagPoint out;
  if (s > s_ext) {
    out.f = 1.0;
    return out;  // zeros with the outside flag
  }
  const double root = std::sqrt((1.0 - 2.0 * r) * (1.0 - 2.0 * r) + 4.0 * s * s);
  out.inside = true;
  out.f = ((2.0 * r - 1.0) + root) / (4.0 * r);
  out.rho = 1.0 / (2.0 * kPi * r * root);
  if (s > 0.0) {
    out.overlap = (2.0 * r - 1.0 - 2.0 * s * s + root) / (8.0 * kPi * r * r * s * s);
  } else {
    // s -> 0 limit: finite for r < 1/2, divergent (zero modes) otherwise
    out.overlap = r < 0.5 ? (1.0 / (1.0 - 2.0 * r) - 1.0) / (4.0 * kPi * r * r)
                          : std::numeric_limits<double>::infinity();
  }
  return out;
}

namespace {

double radius_from_sum(double r, double beta, int M) {
  if (M == 2) return std::sqrt(r / (1.0 - beta));  // single-term sum, exact
  // LHS(x) = sum_{k=1}^{M-1} x^k (1 - k beta), strictly increasing in x > 0
  auto lhs = [&](double x) {
    double sum = 0.0, xk = 1.0;
    for (int k = 1; k < M; ++k) {
      xk *= x;
      sum += xk * (1.0 - k * beta);
      if (sum > 4.0 * r && x < 1.0) break;  // already past the target
      if (!std::isfinite(sum)) break;
      if (x < 1.0 && xk < 1e-18 * sum) break;
    }
    return sum;
  };
  double lo = 0.0, hi = 1.0;
  while (lhs(hi) < r) hi *= 2.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (lhs(mid) < r ? lo : hi) = mid;
  }
  const double x = 0.5 * (lo + hi);
  const double alpha = 1.0 / (1.0 - beta);
  return alpha * r / std::sqrt(x);
}

}  // namespace

double deep_lag_radius(const LagLaw& law) {
  if (law.p == 0) throw UsageError("deep_lag_radius: beta must be positive");
  return radius_from_sum(law.r, law.beta(), law.m_ceil());
}

double deep_lag_radius(double r, double beta) {
  if (r <= 0.0) throw UsageError("deep_lag_radius: r must be positive");
  if (beta <= 0.0 || beta >= 1.0) throw UsageError("deep_lag_radius: beta must be in (0, 1)");
  const int M = static_cast<int>(std::ceil(1.0 / beta - 1e-12));
  return radius_from_sum(r, beta, M);
}

DeepLagPoint deep_lag_solve(const LagLaw& law, double s) {
  if (law.p == 0) throw UsageError("deep_lag_solve: beta must be positive (use the unit-lag law)");
  if (s < 0.0) throw UsageError("deep_lag_solve: s must be nonnegative");
  const double s_ext = deep_lag_radius(law);
  DeepLagPoint out;
  if (s >= s_ext) {
    out.f = 1.0;
    out.u = 0.0;
    out.inside = s < s_ext * (1.0 + 1e-12);
    return out;
  }

  const DeepSystem sys(law);
  auto newton_at = [&](double sk, Eigen::Vector2d x) {
    return roots::newton_system(
        [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
          return sys.residual(y[0], y[1], sk);
        },
        Eigen::VectorXd(x), 1e-12, 60);
  };

  // continuation from just inside the outer edge down to s
  Eigen::Vector2d x(1.0 - 1e-4, 1e-4);
  double s_cur = s_ext * (1.0 - 1e-4);
  {
    const Eigen::VectorXd sol = newton_at(s_cur, x);
    x = {sol[0], sol[1]};
  }
  double step = (s_cur - s) / 40.0;
  while (s_cur > s + 1e-15) {
    const double s_next = std::max(s, s_cur - step);
    try {
      const Eigen::VectorXd sol = newton_at(s_next, x);
      x = {sol[0], sol[1]};
      s_cur = s_next;
    } catch (const ConvergenceError&) {
      step *= 0.5;
      if (step < 1e-9 * s_ext) throw;
    }
  }
  out.f = x[0];
  out.u = std::max(x[1], 0.0);
  out.inside = true;
  return out;
}

radial::RadialCurve deep_lag_curve(const LagLaw& law, const std::vector<double>& grid) {
  radial::RadialCurve curve;
  curve.r = law.r;
  curve.beta = law.beta();
  curve.convention = radial::RadialConvention::lagged;
  curve.zero_mode_weight = std::max(1.0 - (1.0 - law.beta()) / law.r, 0.0);
  curve.grid = grid;
  const size_t n = grid.size();
  curve.F.resize(n);
  curve.rho.assign(n, 0.0);
  curve.O.assign(n, 0.0);

  const double s_ext = deep_lag_radius(law);
  const DeepSystem sys(law);

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return grid[a] > grid[b]; });

  Eigen::Vector2d x(1.0 - 1e-4, 1e-4);
  double s_prev = s_ext * (1.0 - 1e-4);
  bool seeded = false;

  auto newton_at = [&](double sk, Eigen::Vector2d x0) {
    return roots::newton_system(
        [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
          return sys.residual(y[0], y[1], sk);
        },
        Eigen::VectorXd(x0), 1e-12, 60);
  };

  for (size_t idx : order) {
    const double s = grid[idx];
    if (s >= s_ext) {
      curve.F[idx] = 1.0;
      if (s > s_ext * (1.0 + 1e-12)) ++curve.clamped_points;
      continue;
    }
    if (s <= 1e-9 * s_ext) {
      curve.F[idx] = curve.zero_mode_weight;
      ++curve.clamped_points;
      continue;
    }
    if (!seeded) {
      const Eigen::VectorXd sol = newton_at(s_prev, x);
      x = {sol[0], sol[1]};
      seeded = true;
    }
    // walk from s_prev down to s with adaptive backoff
    double step = std::max((s_prev - s) / 4.0, 1e-4 * s_ext);
    double s_cur = s_prev;
    while (s_cur > s + 1e-15) {
      const double s_next = std::max(s, s_cur - step);
      try {
        const Eigen::VectorXd sol = newton_at(s_next, x);
        x = {sol[0], sol[1]};
        s_cur = s_next;
      } catch (const ConvergenceError&) {
        step *= 0.5;
        if (step < 1e-9 * s_ext) throw;
      }
    }
    s_prev = s;
    curve.F[idx] = x[0];
    curve.O[idx] = std::max(x[1], 0.0) / kPi;
    // density: sensitivity solve on the converged Newton system
    const double hs = 1e-6 * (1.0 + s);
    const Eigen::Vector2d r0 = sys.residual(x[0], x[1], s);
    Eigen::Matrix2d jac;
    const double hf = 1e-7 * (1.0 + std::abs(x[0])), hu = 1e-7 * (1.0 + std::abs(x[1]));
    jac.col(0) = (sys.residual(x[0] + hf, x[1], s) - r0) / hf;
    jac.col(1) = (sys.residual(x[0], x[1] + hu, s) - r0) / hu;
    const Eigen::Vector2d rs = (sys.residual(x[0], x[1], s + hs) - r0) / hs;
    const Eigen::Vector2d sens = jac.partialPivLu().solve(-rs);
    curve.rho[idx] = sens[0] / (2.0 * kPi * s);
  }
  return curve;
}

}  // namespace lagspec::lag
