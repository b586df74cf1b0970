#include "lagspec/radial.hpp"

#include <algorithm>
#include <cmath>

#include "lagspec/errors.hpp"
#include "lagspec/quadrature.hpp"
#include "lagspec/roots.hpp"

namespace lagspec::radial {

namespace {

constexpr double kPi = 3.141592653589793238462643383279503;

roots::PolyReal hl_cubic(double s, double r) {
  const double u = r - 1.0;
  return {{u * u * u - r * s * s, 5.0 * u * u - s * s, 8.0 * u, 4.0}};
}

// quartic in M at real z (coefficients ascending in M)
roots::PolyReal sym_quartic(double z, double r) {
  return {{r, 2.0 * (r * r + r - z * z), r * (1.0 + 4.0 * r + r * r - z * z),
           2.0 * r * r * (1.0 + r), r * r * r}};
}

// derivative of the cubic residual in F
double hl_dres_dF(double F, double s, double r) {
  const double u = r - 1.0;
  return 12.0 * F * F + 16.0 * F * u + 5.0 * u * u - s * s;
}

// branch walk for F: continuity from F(s_ext) = 1 down to the target s
double hl_cdf_walk(double s_target, double r) {
  const SupportRing ring = spectral_radii(r);
  double F = 1.0;
  double s = ring.s_ext;
  const int steps = 80;
  for (int k = 1; k <= steps; ++k) {
    const double sk = ring.s_ext + (s_target - ring.s_ext) * k / steps;
    const auto rts = roots::solve_cubic(hl_cubic(sk, r));
    F = roots::select_branch(rts, roots::BranchSelector::continuity(F, 0.5)).real();
    s = sk;
  }
  return std::clamp(F, 0.0, 1.0);
}

}  // namespace

SupportRing spectral_radii(double r) {
  if (r <= 0.0) throw UsageError("spectral_radii: r must be positive");
  SupportRing ring;
  ring.s_ext = std::sqrt(r * (r + 1.0));
  ring.s_int = r > 1.0 ? std::pow(r - 1.0, 1.5) / std::sqrt(r) : 0.0;
  ring.zero_mode_weight = std::max(1.0 - 1.0 / r, 0.0);
  return ring;
}

double hl_radial_cdf(double s, double r, bool* clamped) {
  if (s < 0.0) throw UsageError("hl_radial_cdf: s must be nonnegative");
  const SupportRing ring = spectral_radii(r);
  if (clamped) *clamped = false;
  if (s >= ring.s_ext) {
    if (clamped) *clamped = s > ring.s_ext * (1.0 + 1e-12);
    return 1.0;
  }
  if (r > 1.0 && s <= ring.s_int) {
    if (clamped) *clamped = s < ring.s_int * (1.0 - 1e-12);
    return 0.0;
  }
  if (s == 0.0) return std::max(1.0 - r, 0.0);  // dual-problem zero modes sit at 0
  return hl_cdf_walk(s, r);
}

double hl_density(double s, double r) {
  const SupportRing ring = spectral_radii(r);
  if (s <= ring.s_int || s >= ring.s_ext) return 0.0;
  const double F = hl_radial_cdf(s, r);
  const double dres = hl_dres_dF(F, s, r);
  // cancellation guard relative to the terms of dP/dF itself
  const double u = r - 1.0;
  const double terms =
      12.0 * F * F + std::abs(16.0 * F * u) + 5.0 * u * u + s * s + 1e-300;
  if (std::abs(dres) < 1e-13 * terms) {
    throw SingularityError("hl_density: vanishing dP/dF at s = " + std::to_string(s));
  }
  const double dFds = 2.0 * s * (F + r) / dres;
  return dFds / (2.0 * kPi * s * r);
}

double hl_overlap(double s, double r) {
  const SupportRing ring = spectral_radii(r);
  if (s < 0.0) throw UsageError("hl_overlap: s must be nonnegative");
  // 0 at the ring edges themselves; for r < 1 the correlator of the dual
  // product genuinely diverges as s -> 0+ (zero modes), so only the edge
  // value is pinned
  if (s <= ring.s_int || s >= ring.s_ext || s == 0.0) return 0.0;
  const double F = hl_radial_cdf(s, r);
  return F * (1.0 - F) / (kPi * s * s);
}

RadialCurve hl_curve(double r, const std::vector<double>& grid) {
  RadialCurve curve;
  curve.r = r;
  curve.beta = 0.0;
  curve.convention = RadialConvention::cyclic_product;
  curve.zero_mode_weight = std::max(1.0 - r, 0.0);  // dual-problem zeros for r < 1
  curve.grid = grid;
  curve.F.resize(grid.size());
  curve.rho.resize(grid.size());
  curve.O.resize(grid.size());

  const SupportRing ring = spectral_radii(r);
  // single descending continuity sweep, then emit in grid order
  std::vector<size_t> order(grid.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return grid[a] > grid[b]; });

  double F = 1.0;
  bool seeded = false;
  for (size_t idx : order) {
    const double s = grid[idx];
    bool clamped = false;
    double Fi;
    if (s >= ring.s_ext) {
      Fi = 1.0;
      clamped = s > ring.s_ext * (1.0 + 1e-12);
    } else if ((r > 1.0 && s <= ring.s_int) || s <= 0.0) {
      Fi = 0.0;
      clamped = true;
    } else {
      if (!seeded) {
        F = hl_cdf_walk(s, r);
        seeded = true;
      } else {
        const auto rts = roots::solve_cubic(hl_cubic(s, r));
        F = roots::select_branch(rts, roots::BranchSelector::continuity(F, 0.5)).real();
        F = std::clamp(F, 0.0, 1.0);
      }
      Fi = F;
    }
    curve.F[idx] = Fi;
    if (s > ring.s_int && s < ring.s_ext && s > 0.0) {
      const double dres = hl_dres_dF(Fi, s, r);
      curve.rho[idx] = (std::abs(dres) < 1e-12)
                           ? 0.0
                           : (2.0 * s * (Fi + r) / dres) / (2.0 * kPi * s * r);
      curve.O[idx] = Fi * (1.0 - Fi) / (kPi * s * s);
    } else {
      curve.rho[idx] = 0.0;
      curve.O[idx] = 0.0;
    }
    if (clamped) ++curve.clamped_points;
  }
  return curve;
}

SymDensity::SymDensity(double r) : r_(r) {
  if (r <= 0.0) throw UsageError("SymDensity: r must be positive");

  // The physical branch is real outside the support and acquires a nonzero
  // imaginary part inside it, so the edge is found by walking the branch
  // inward from the asymptotic region and bisecting the Im transition.
  // (The quartic discriminant is no edge indicator here: two conjugate pairs
  // can coexist in the bulk, keeping it positive on both sides.)
  const auto is_complex = [](Complex m) {
    return std::abs(m.imag()) > 1e-8 * (1.0 + std::abs(m.real()));
  };
  const double z_start = std::max(4.0 * (2.0 + 2.0 * std::sqrt(r) + r), 8.0);
  Complex M(r / (2.0 * z_start * z_start), 0.0);

  // walk a real branch value down to a given z from a known (z0, M0)
  const auto walk = [&](double z0, Complex m0, double z1, int steps) {
    Complex m = m0;
    for (int k = 1; k <= steps; ++k) {
      const double z = z0 + (z1 - z0) * k / steps;
      const auto rts = roots::solve_quartic(sym_quartic(z, r));
      m = roots::select_branch(rts, roots::BranchSelector::continuity(m, 0.5));
    }
    return m;
  };

  // geometric descent until the branch turns complex
  double z_hi = z_start, z_lo = -1.0;
  Complex m_hi = M;
  for (double z = z_start; z > 1e-4; z *= 0.97) {
    const Complex m = walk(z / 0.97, m_hi, z, 1);
    if (is_complex(m)) {
      z_lo = z;
      break;
    }
    z_hi = z;
    m_hi = m;
  }
  if (z_lo < 0.0) {
    throw NumericalError("SymDensity: no spectral support found");
  }
  for (int it = 0; it < 100 && (z_hi - z_lo) > 1e-13 * z_hi; ++it) {
    const double mid = 0.5 * (z_lo + z_hi);
    const Complex m = walk(z_hi, m_hi, mid, 4);
    if (is_complex(m)) {
      z_lo = mid;
    } else {
      z_hi = mid;
      m_hi = m;
    }
  }
  edge_ = 0.5 * (z_lo + z_hi);

  // branch cache along the real axis, walked inward from the edge bracket.
  // Below z_floor_ the quartic's roots collide at M = -1 (a double root, or a
  // quadruple one at r = 1) and closed forms lose the branch, so the cache
  // stops there and evaluation extrapolates with a fitted power law.
  z_floor_ = std::max(1e-3 * edge_, 1e-4);
  const int n = 4000;
  cache_lambda_.resize(n);
  cache_m_.resize(n);
  const double z0 = edge_ * 1.02;
  Complex m_cache = walk(z_hi, m_hi, z0, 4);
  for (int i = 0; i < n; ++i) {
    const double z = z0 + (z_floor_ - z0) * static_cast<double>(i) / (n - 1);
    const auto rts = roots::solve_quartic(sym_quartic(z, r));
    m_cache = roots::select_branch(rts, roots::BranchSelector::continuity(m_cache, 0.5));
    // physical upper-lip branch carries Im M <= 0 for z > 0
    if (m_cache.imag() > 0.0) m_cache = std::conj(m_cache);
    cache_lambda_[i] = z;
    cache_m_[i] = m_cache;
  }
  std::reverse(cache_lambda_.begin(), cache_lambda_.end());
  std::reverse(cache_m_.begin(), cache_m_.end());

  // small-|z| model rho ~ c z^-eta (eta = 0 regular, 1/2 at the r = 1 cusp)
  const double r1 = density_at(z_floor_);
  const double r2 = density_at(2.0 * z_floor_);
  floor_eta_ = (r1 > 0.0 && r2 > 0.0) ? std::clamp(std::log(r1 / r2) / std::log(2.0), 0.0, 0.75)
                                      : 0.0;
  floor_rho_ = r1;
}

double SymDensity::density_at(double z) const {
  const Complex M = moment_gf(z);
  return -((M + 1.0) / z).imag() / kPi;
}

Complex SymDensity::moment_gf(double lambda) const {
  const double z = std::abs(lambda);
  if (z >= cache_lambda_.back()) {
    // outside the cache: real branch, irrelevant for the density
    const auto rts = roots::solve_quartic(sym_quartic(z, r_));
    return roots::select_branch(rts, roots::BranchSelector::continuity(cache_m_.back(), 1.0));
  }
  const auto it = std::lower_bound(cache_lambda_.begin(), cache_lambda_.end(), z);
  const size_t i = std::min<size_t>(it - cache_lambda_.begin(), cache_m_.size() - 1);
  const auto rts = roots::solve_quartic(sym_quartic(z, r_));
  Complex M = roots::select_branch(rts, roots::BranchSelector::continuity(cache_m_[i], 0.5));
  if (M.imag() > 0.0) M = std::conj(M);
  if (lambda < 0.0) M = std::conj(M);  // G(conj z) = conj G(z) across the axis flip
  return M;
}

double SymDensity::operator()(double lambda) const {
  const double z = std::abs(lambda);
  if (z >= edge_) return 0.0;
  if (z < z_floor_) {
    return floor_rho_ * std::pow(z_floor_ / std::max(z, 1e-300), floor_eta_);
  }
  return density_at(z);
}

double SymDensity::derivative(double lambda) const {
  const double sign = lambda < 0.0 ? -1.0 : 1.0;
  const double z = std::abs(lambda);
  if (z >= edge_) return 0.0;
  if (z < z_floor_) {
    if (floor_eta_ == 0.0) return 0.0;  // regular even density: rho'(0) = 0
    return sign * (-floor_eta_) * (*this)(z) / std::max(z, 1e-300);
  }
  const Complex M = moment_gf(z);
  // implicit differentiation of P(M, z) = 0
  const Complex pm = 4.0 * r_ * r_ * r_ * M * M * M +
                     6.0 * r_ * r_ * (1.0 + r_) * M * M +
                     2.0 * r_ * (1.0 + 4.0 * r_ + r_ * r_ - z * z) * M +
                     2.0 * (r_ * r_ + r_ - z * z);
  const Complex pz = -2.0 * z * (r_ * M * M + 2.0 * M);
  if (std::abs(pm) < 1e-14) {
    throw SingularityError("SymDensity::derivative: vanishing dP/dM");
  }
  const Complex dM = -pz / pm;
  const double drho = -((dM * z - (M + 1.0)) / (z * z)).imag() / kPi;
  return sign * drho;
}

double abel_forward(const std::function<double(double)>& rho_radial, double x, double s_max,
                    double tol) {
  const double ax = std::abs(x);
  if (ax >= s_max) return 0.0;
  const double u_max = std::sqrt(s_max * s_max - ax * ax);
  return 2.0 * integrate([&](double u) { return rho_radial(std::sqrt(ax * ax + u * u)); },
                         0.0, u_max, tol);
}

double abel_inverse(const std::function<double(double)>& rho_sym_deriv, double s,
                    double x_max, double tol) {
  if (s >= x_max) return 0.0;
  const double u_max = std::sqrt(x_max * x_max - s * s);
  const double val = integrate(
      [&](double u) {
        const double x = std::sqrt(s * s + u * u);
        return rho_sym_deriv(x) / x;
      },
      0.0, u_max, tol);
  return -val / kPi;
}

}  // namespace lagspec::radial
