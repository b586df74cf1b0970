#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace lagspec::radial {

using Complex = std::complex<double>;

/// Annular support of a rotationally symmetric spectrum.
/// zero_mode_weight is the z = 0 atom of the N-problem (unit-lag convention).
struct SupportRing {
  double s_int = 0.0;
  double s_ext = 0.0;
  double zero_mode_weight = 0.0;
};

/// s_ext = sqrt(r (r+1)), s_int = (r-1)^{3/2}/sqrt(r) theta(r-1), closed form.
SupportRing spectral_radii(double r);

/// Which eigenvalue count a radial CDF refers to.
///  - cyclic_product: the T-sized dual problem (the Haagerup-Larsen cubic);
///    its F carries a (1-r) offset at s = 0+ when r < 1 and starts at 0 at
///    s_int when r > 1 (the original problem's zero modes are excluded).
///  - lagged: the N-sized lagged matrix itself; its f starts at 0 for r <= 1
///    and at the zero-mode weight 1 - 1/r for r > 1.
enum class RadialConvention { cyclic_product, lagged };

/// Radial CDF F(s) from the Haagerup-Larsen cubic
///   4F^3 + 8F^2(r-1) + F(5(r-1)^2 - s^2) + (r-1)^3 - r s^2 = 0,
/// real branch continued from F(s_ext) = 1. Outside the ring the value clamps
/// (0 below s_int for r > 1, the (1-r) plateau below s = 0+ for r < 1 is part
/// of the branch itself; 1 above s_ext); *clamped reports it.
double hl_radial_cdf(double s, double r, bool* clamped = nullptr);

/// rho(s) = (1/(2 pi s r)) dF/ds with dF/ds by implicit differentiation of the
/// cubic (never a numerical difference of F).
double hl_density(double s, double r);

/// Eigenvector overlap correlator O(s) = F(s)(1 - F(s)) / (pi s^2).
double hl_overlap(double s, double r);

/// Sampled radial curves s -> (F, rho, O) with provenance.
struct RadialCurve {
  std::vector<double> grid;
  std::vector<double> F;
  std::vector<double> rho;
  std::vector<double> O;
  double r = 0.0;
  double beta = 0.0;
  RadialConvention convention = RadialConvention::cyclic_product;
  double zero_mode_weight = 0.0;  // atom at s = 0 under this convention
  int clamped_points = 0;         // grid points outside the ring
};

/// One continuity sweep of the Haagerup-Larsen branch over an ascending grid.
RadialCurve hl_curve(double r, const std::vector<double>& grid);

/// Density of the symmetrized lag matrix: the physical branch of
///   r^3 M^4 + 2r^2(1+r) M^3 + r(1+4r+r^2-z^2) M^2 + 2(r^2+r-z^2) M + r = 0
/// with rho(lambda) = -(1/pi) Im[(M+1)/z] on the upper lip. The branch is
/// pinned by M ~ r/(2 z^2) at large z and carried to the real axis by
/// continuation; an instance caches the branch along the axis so pointwise
/// evaluation stays cheap.
class SymDensity {
 public:
  explicit SymDensity(double r);

  double r() const { return r_; }
  /// support edge: the |z| where the quartic discriminant changes sign
  double edge() const { return edge_; }
  double operator()(double lambda) const;   // even in lambda
  double derivative(double lambda) const;   // d rho / d lambda, odd in lambda
  Complex moment_gf(double lambda) const;   // physical M at lambda + i0

 private:
  double density_at(double z) const;

  double r_;
  double edge_;
  double z_floor_ = 0.0;
  double floor_rho_ = 0.0;
  double floor_eta_ = 0.0;
  std::vector<double> cache_lambda_;
  std::vector<Complex> cache_m_;
};

/// Marginal of a rotationally symmetric density: the Abel transform
///   rho_x(x) = 2 int_x^smax s rho(s) ds / sqrt(s^2 - x^2),
/// evaluated with the substitution s = sqrt(x^2 + u^2) that removes the
/// endpoint singularity.
double abel_forward(const std::function<double(double)>& rho_radial, double x,
                    double s_max, double tol = 1e-9);

/// Inverse Abel transform from the derivative of a symmetric marginal:
///   rho(s) = -(1/pi) int_s^xmax (d rho_sym/dx) dx / sqrt(x^2 - s^2).
/// For non-normal ensembles this is *not* a valid density map; the result may
/// go negative and is returned unclamped.
double abel_inverse(const std::function<double(double)>& rho_sym_deriv, double s,
                    double x_max, double tol = 1e-9);

}  // namespace lagspec::radial
