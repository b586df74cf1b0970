#include "lagspec/roots.hpp"

#include <algorithm>
#include <cmath>

#include "lagspec/errors.hpp"

namespace lagspec::roots {

namespace {

constexpr double kRealImagTol = 1e-9;      // |Im| <= tol (1+|Re|) counts as real
constexpr double kDiscFallback = 1e-10;    // relative discriminant magnitude

double zero_dust(double im, double re) {
  return std::abs(im) <= kRealImagTol * (1.0 + std::abs(re)) ? 0.0 : im;
}

void polish(std::vector<Complex>& roots, const PolyReal& p) {
  for (auto& x : roots) {
    for (int it = 0; it < 3; ++it) {
      const Complex f = p.eval(x);
      const Complex df = p.deriv_eval(x);
      if (std::abs(df) < 1e-300) break;
      const Complex step = f / df;
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
      if (std::abs(step) > 0.5 * (1.0 + std::abs(x))) break;  // keep close roots apart
      x -= step;
    }
    x = Complex(x.real(), zero_dust(x.imag(), x.real()));
  }
}

void sort_roots(std::vector<Complex>& roots) {
  std::sort(roots.begin(), roots.end(), [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
}

// Small roots of a wide-dynamic-range polynomial lose all relative accuracy in
// the closed forms. They are the reciprocals of the *large* roots of the
// reversed polynomial, which the closed forms do resolve; swap in whichever
// candidate has the smaller residual.
void refine_with_reversal(std::vector<Complex>& roots,
                          const std::vector<Complex>& reversed_roots, const PolyReal& p) {
  for (auto& x : roots) {
    Complex best_alt(0.0, 0.0);
    double best_d = 1e300;
    for (Complex y : reversed_roots) {
      if (std::abs(y) < 1e-300) continue;
      const Complex cand = 1.0 / y;
      const double d = std::abs(cand - x) / (1.0 + std::abs(x));
      if (d < best_d) {
        best_d = d;
        best_alt = cand;
      }
    }
    if (best_d < 1e300 && std::abs(p.eval(best_alt)) < std::abs(p.eval(x))) {
      x = Complex(best_alt.real(), zero_dust(best_alt.imag(), best_alt.real()));
    }
  }
}

std::vector<Complex> companion_roots(const std::vector<double>& c) {
  // c ascending, leading coefficient nonzero
  const int n = static_cast<int>(c.size()) - 1;
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[i] / c[n];
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  std::vector<Complex> out(n);
  for (int i = 0; i < n; ++i) out[i] = es.eigenvalues()(i);
  return out;
}

std::vector<Complex> solve_quadratic(double a, double b, double c) {
  if (a == 0.0) {
    if (b == 0.0) return {};
    return {Complex(-c / b, 0.0)};
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc >= 0.0) {
    // numerically stable pairing: avoid cancellation in the small root
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    double r1 = q / a;
    double r2 = (q != 0.0) ? c / q : -b / a - r1;
    return {Complex(r1, 0.0), Complex(r2, 0.0)};
  }
  const double re = -0.5 * b / a;
  const double im = std::sqrt(-disc) / (2.0 * std::abs(a));
  return {Complex(re, im), Complex(re, -im)};
}

std::vector<Complex> cubic_closed_form(double a, double b, double c, double d) {
  // depressed form t^3 + p t + q, x = t - b/(3a)
  const double shift = b / (3.0 * a);
  const double p = (3.0 * a * c - b * b) / (3.0 * a * a);
  const double q = (2.0 * b * b * b - 9.0 * a * b * c + 27.0 * a * a * d) / (27.0 * a * a * a);
  const double half_q = 0.5 * q;
  const double third_p = p / 3.0;
  const double disc = half_q * half_q + third_p * third_p * third_p;

  std::vector<Complex> out;
  if (disc <= 0.0) {
    // three real roots, trigonometric form
    const double m = 2.0 * std::sqrt(std::max(-third_p, 0.0));
    double arg = (m == 0.0) ? 0.0 : 3.0 * q / (p * m);
    arg = std::clamp(arg, -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    constexpr double two_pi_3 = 2.0943951023931953;
    for (int k = 0; k < 3; ++k) {
      out.emplace_back(m * std::cos(theta - two_pi_3 * k) - shift, 0.0);
    }
  } else {
    const double sq = std::sqrt(disc);
    const double u = std::cbrt(-half_q + sq);
    const double v = std::cbrt(-half_q - sq);
    const double t0 = u + v;
    out.emplace_back(t0 - shift, 0.0);
    const double re = -0.5 * t0 - shift;
    const double im = 0.5 * std::sqrt(3.0) * (u - v);
    out.emplace_back(re, im);
    out.emplace_back(re, -im);
  }
  return out;
}

}  // namespace

int PolyReal::degree() const {
  const double scale = max_abs_coeff();
  int d = static_cast<int>(coeffs.size()) - 1;
  while (d > 0 && std::abs(coeffs[d]) <= 1e-14 * scale) --d;
  return d;
}

double PolyReal::eval(double x) const {
  double acc = 0.0;
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 0; --k) acc = acc * x + coeffs[k];
  return acc;
}

Complex PolyReal::eval(Complex x) const {
  Complex acc = 0.0;
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 0; --k) acc = acc * x + coeffs[k];
  return acc;
}

Complex PolyReal::deriv_eval(Complex x) const {
  Complex acc = 0.0;
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 1; --k) {
    acc = acc * x + static_cast<double>(k) * coeffs[k];
  }
  return acc;
}

double PolyReal::max_abs_coeff() const {
  double m = 0.0;
  for (double c : coeffs) m = std::max(m, std::abs(c));
  return m;
}

bool is_real_root(Complex root) {
  return std::abs(root.imag()) <= kRealImagTol * (1.0 + std::abs(root.real()));
}

double discriminant(const PolyReal& p) {
  const int d = p.degree();
  const auto& c = p.coeffs;
  if (d == 2) {
    return c[1] * c[1] - 4.0 * c[2] * c[0];
  }
  if (d == 3) {
    const double a = c[3], b = c[2], cc = c[1], dd = c[0];
    return 18.0 * a * b * cc * dd - 4.0 * b * b * b * dd + b * b * cc * cc -
           4.0 * a * cc * cc * cc - 27.0 * a * a * dd * dd;
  }
  if (d == 4) {
    const double a = c[4], b = c[3], cc = c[2], dd = c[1], e = c[0];
    const double b2 = b * b, c2 = cc * cc, d2 = dd * dd, a2 = a * a;
    return 256.0 * a2 * a * e * e * e - 192.0 * a2 * b * dd * e * e -
           128.0 * a2 * c2 * e * e + 144.0 * a2 * cc * d2 * e - 27.0 * a2 * d2 * d2 +
           144.0 * a * b2 * cc * e * e - 6.0 * a * b2 * d2 * e -
           80.0 * a * b * c2 * dd * e + 18.0 * a * b * cc * d2 * dd +
           16.0 * a * c2 * c2 * e - 4.0 * a * c2 * cc * d2 - 27.0 * b2 * b2 * e * e +
           18.0 * b2 * b * cc * dd * e - 4.0 * b2 * b * d2 * dd - 4.0 * b2 * c2 * cc * e +
           b2 * c2 * d2;
  }
  return 0.0;
}

std::vector<Complex> solve_poly(const PolyReal& p) {
  const int d = p.degree();
  std::vector<double> c(p.coeffs.begin(), p.coeffs.begin() + d + 1);
  switch (d) {
    case 0:
      return {};
    case 1:
      return {Complex(-c[0] / c[1], 0.0)};
    case 2: {
      auto out = solve_quadratic(c[2], c[1], c[0]);
      polish(out, p);
      sort_roots(out);
      return out;
    }
    case 3:
      return solve_cubic(PolyReal{c});
    case 4:
      return solve_quartic(PolyReal{c});
    default:
      throw NumericalError("solve_poly: degree > 4 has no closed form here");
  }
}

std::vector<Complex> solve_cubic(const PolyReal& p) {
  const int d = p.degree();
  if (d < 3) return solve_poly(PolyReal{{p.coeffs.begin(), p.coeffs.begin() + d + 1}});
  const auto& c = p.coeffs;

  std::vector<Complex> out;
  const double scale = p.max_abs_coeff();
  const double disc = discriminant(p);
  // relative discriminant: disc is degree-4 homogeneous in the coefficients
  const double disc_rel = std::abs(disc) / (scale * scale * scale * scale);
  if (disc_rel < kDiscFallback) {
    out = companion_roots({c[0], c[1], c[2], c[3]});
  } else {
    out = cubic_closed_form(c[3], c[2], c[1], c[0]);
  }
  polish(out, p);
  if (std::abs(c[0]) > 1e-300) {
    const PolyReal rev{{c[3], c[2], c[1], c[0]}};
    auto rev_roots = cubic_closed_form(c[0], c[1], c[2], c[3]);
    polish(rev_roots, rev);
    refine_with_reversal(out, rev_roots, p);
  }
  sort_roots(out);
  return out;
}

namespace {

std::vector<Complex> quartic_raw(const PolyReal& p) {
  const auto& c = p.coeffs;
  const double a = c[4];
  // monic, depressed: y^4 + p y^2 + q y + r with x = y - b/4
  const double b3 = c[3] / a, b2 = c[2] / a, b1 = c[1] / a, b0 = c[0] / a;
  const double sh = b3 / 4.0;
  const double pp = b2 - 3.0 * b3 * b3 / 8.0;
  const double qq = b1 - b3 * b2 / 2.0 + b3 * b3 * b3 / 8.0;
  const double rr = b0 - b3 * b1 / 4.0 + b3 * b3 * b2 / 16.0 - 3.0 * b3 * b3 * b3 * b3 / 256.0;

  std::vector<Complex> out;
  const double scale = p.max_abs_coeff();
  const double disc_rel = std::abs(discriminant(p)) / std::pow(scale, 6.0);
  if (disc_rel < kDiscFallback) {
    out = companion_roots({c[0], c[1], c[2], c[3], c[4]});
  } else if (std::abs(qq) <= 1e-14 * (1.0 + std::abs(pp) + std::abs(rr))) {
    // biquadratic
    for (Complex u : solve_quadratic(1.0, pp, rr)) {
      const Complex s = std::sqrt(u);
      out.push_back(s - sh);
      out.push_back(-s - sh);
    }
  } else {
    // Ferrari: resolvent cubic 8 m^3 + 8 p m^2 + (2 p^2 - 8 r) m - q^2 = 0
    auto ms = cubic_closed_form(8.0, 8.0 * pp, 2.0 * pp * pp - 8.0 * rr, -qq * qq);
    // take the real root of largest magnitude with 2m > -p when possible
    Complex m = ms[0];
    for (Complex cand : ms) {
      if (!is_real_root(cand)) continue;
      if (!is_real_root(m) || cand.real() > m.real()) m = cand;
    }
    const Complex s = std::sqrt(2.0 * m);
    const Complex t = qq / (2.0 * s);
    // y^4 + p y^2 + q y + r = (y^2 + s y + (p/2 + m - t))(y^2 - s y + (p/2 + m + t))
    const Complex k1 = pp / 2.0 + m - t;
    const Complex k2 = pp / 2.0 + m + t;
    auto quad = [](Complex bq, Complex cq) {
      const Complex sq = std::sqrt(bq * bq - 4.0 * cq);
      return std::pair<Complex, Complex>{(-bq + sq) / 2.0, (-bq - sq) / 2.0};
    };
    auto [y1, y2] = quad(s, k1);
    auto [y3, y4] = quad(-s, k2);
    out = {y1 - sh, y2 - sh, y3 - sh, y4 - sh};
  }
  polish(out, p);
  return out;
}

}  // namespace

std::vector<Complex> solve_quartic(const PolyReal& p) {
  const int d = p.degree();
  if (d < 4) return solve_poly(PolyReal{{p.coeffs.begin(), p.coeffs.begin() + d + 1}});
  const auto& c = p.coeffs;
  auto out = quartic_raw(PolyReal{{c[0], c[1], c[2], c[3], c[4]}});
  if (std::abs(c[0]) > 1e-300) {
    const auto rev_roots = quartic_raw(PolyReal{{c[4], c[3], c[2], c[1], c[0]}});
    refine_with_reversal(out, rev_roots, p);
  }
  sort_roots(out);
  return out;
}

BranchSelector BranchSelector::continuity(Complex previous, double max_jump) {
  BranchSelector s;
  s.mode = Mode::continuity;
  s.previous_root = previous;
  s.max_jump = max_jump;
  return s;
}

BranchSelector BranchSelector::range(double lo, double hi, bool monotonic) {
  BranchSelector s;
  s.mode = Mode::range;
  s.lo = lo;
  s.hi = hi;
  s.monotonic = monotonic;
  return s;
}

BranchSelector BranchSelector::asymptotic(Complex target) {
  BranchSelector s;
  s.mode = Mode::asymptotic;
  s.target = target;
  return s;
}

Complex select_branch(const std::vector<Complex>& roots, const BranchSelector& sel) {
  auto closest_to = [&](Complex ref, const std::vector<Complex>& cand) {
    Complex best = cand[0];
    double best_d = std::abs(cand[0] - ref);
    for (Complex r : cand) {
      const double d = std::abs(r - ref);
      if (d < best_d - 1e-15 * (1.0 + best_d)) {
        best = r;
        best_d = d;
      } else if (d <= best_d + 1e-15 * (1.0 + best_d) && r.real() > best.real()) {
        best = r;  // tie toward larger real part
        best_d = std::min(best_d, d);
      }
    }
    return best;
  };

  switch (sel.mode) {
    case BranchSelector::Mode::continuity: {
      if (roots.empty()) throw BranchLostError("select_branch: no candidates", roots);
      const Complex best = closest_to(sel.previous_root, roots);
      if (std::abs(best - sel.previous_root) > sel.max_jump) {
        throw BranchLostError("select_branch: continuity jump exceeds max_jump", roots);
      }
      return best;
    }
    case BranchSelector::Mode::range: {
      std::vector<Complex> adm;
      for (Complex r : roots) {
        if (is_real_root(r) && r.real() >= sel.lo && r.real() <= sel.hi) {
          adm.emplace_back(r.real(), 0.0);
        }
      }
      if (adm.empty()) throw BranchLostError("select_branch: no real root in range", roots);
      Complex best = adm[0];
      for (Complex r : adm) {
        if (r.real() > best.real()) best = r;  // deterministic: larger real part
      }
      return best;
    }
    case BranchSelector::Mode::asymptotic: {
      if (roots.empty()) throw BranchLostError("select_branch: no candidates", roots);
      return closest_to(sel.target, roots);
    }
  }
  throw BranchLostError("select_branch: bad selector", roots);
}

Eigen::VectorXd newton_system(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual_fn,
    Eigen::VectorXd x, double tol, int max_iter) {
  const auto norm_inf = [](const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); };
  Eigen::VectorXd r = residual_fn(x);
  double rn = norm_inf(r);
  const int n = static_cast<int>(x.size());

  for (int it = 0; it < max_iter; ++it) {
    if (rn <= tol) return x;
    Eigen::MatrixXd jac(r.size(), n);
    for (int j = 0; j < n; ++j) {
      const double h = 1e-7 * (1.0 + std::abs(x[j]));
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      jac.col(j) = (residual_fn(xp) - residual_fn(xm)) / (2.0 * h);
    }
    const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) {
      throw ConvergenceError("newton_system: singular Jacobian",
                             {x.data(), x.data() + n}, rn);
    }
    // backtracking on the residual norm
    double lambda = 1.0;
    for (int bt = 0; bt < 10; ++bt) {
      const Eigen::VectorXd xn = x + lambda * step;
      const Eigen::VectorXd rnew = residual_fn(xn);
      const double rn_new = norm_inf(rnew);
      if (rn_new < rn || rn_new <= tol) {
        x = xn;
        r = rnew;
        rn = rn_new;
        break;
      }
      lambda *= 0.5;
      if (bt == 9) {
        x = xn;
        r = rnew;
        rn = rn_new;
      }
    }
  }
  if (rn <= tol) return x;
  throw ConvergenceError("newton_system: max_iter exceeded", {x.data(), x.data() + n}, rn);
}

}  // namespace lagspec::roots
