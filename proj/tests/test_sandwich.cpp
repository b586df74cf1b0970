#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include "lagspec/ensemble.hpp"
#include "lagspec/errors.hpp"
#include "lagspec/lagged_laws.hpp"
#include "lagspec/quaternion.hpp"
#include "lagspec/sandwich.hpp"

using namespace lagspec::qgf;
using Complex = std::complex<double>;

namespace {

constexpr double kPi = 3.141592653589793238462643383279503;

Eigen::MatrixXcd nilpotent_shift(int T, int tau) {
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(T, T);
  for (int t = 0; t + tau < T; ++t) D(t, t + tau) = 1.0;
  return D;
}

Eigen::MatrixXcd cyclic_shift(int T, int tau) {
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(T, T);
  for (int t = 0; t < T; ++t) D(t, (t + tau) % T) = 1.0;
  return D;
}

// Marchenko-Pastur Green's function from the R-transform route (test oracle)
Complex mp_green(Complex z, double r) {
  const double sr = std::sqrt(r);
  const Complex a = (1.0 - sr) * (1.0 - sr), b = (1.0 + sr) * (1.0 + sr);
  return (z + r - 1.0 - std::sqrt(z - a) * std::sqrt(z - b)) / (2.0 * z * r);
}

}  // namespace

TEST_CASE("quaternion algebra closure") {
  const Quaternion2 x{{0.3, -1.1}, {0.7, 0.2}};
  const Quaternion2 y{{-0.4, 0.9}, {1.3, -0.6}};
  const Quaternion2 p = x * y;
  // multiplication agrees with the 2x2 matrix product
  CHECK((x.matrix() * y.matrix() - p.matrix()).norm() < 1e-14);
  const Quaternion2 inv = x.inverse();
  CHECK(((x * inv).matrix() - Eigen::Matrix2cd::Identity()).norm() < 1e-14);
  CHECK(x.norm2() == doctest::Approx(std::norm(x.a) + std::norm(x.b)));
}

TEST_CASE("quaternionic moment gf: zero matrix and identity matrix") {
  const int T = 4;
  CHECK(quaternionic_moment_gf(Eigen::MatrixXcd::Zero(T, T), Matrix2c::Identity() * 0.3)
            .norm() == 0.0);

  const Complex z(0.37, 0.21);
  Matrix2c Q = Matrix2c::Zero();
  Q(0, 0) = z;
  Q(1, 1) = std::conj(z);
  const Matrix2c M = quaternionic_moment_gf(Eigen::MatrixXcd::Identity(T, T), Q);
  CHECK(std::abs(M(0, 0) - 1.0 / (1.0 - z)) < 1e-13);
  CHECK(std::abs(M(1, 1) - 1.0 / (1.0 - std::conj(z))) < 1e-13);
  CHECK(std::abs(M(0, 1)) < 1e-14);

  // singular inner matrix
  Matrix2c bad = Matrix2c::Zero();
  bad(0, 0) = 1.0;
  bad(1, 1) = 1.0;
  CHECK_THROWS_AS(
      static_cast<void>(quaternionic_moment_gf(Eigen::MatrixXcd::Identity(T, T), bad)),
      lagspec::SingularityError);
}

TEST_CASE("mixed-moment extraction matches brute-force chain traces") {
  // the dagger word letter maps to the second block; coefficient of
  // Q_{a1 a2}...Q_{a n-1 an} in component (a1, an) is (1/T) Tr A^{a1}..A^{an}
  const Eigen::MatrixXcd A0 = (Eigen::MatrixXcd(2, 2) << 0, 1, 0, 0).finished();
  CHECK(std::abs(extract_mixed_moment(A0, {0, 1}) - Complex(0.5, 0.0)) < 1e-10);

  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd;
  for (int T : {2, 3, 4}) {
    Eigen::MatrixXcd A(T, T);
    for (int i = 0; i < T; ++i)
      for (int j = 0; j < T; ++j) A(i, j) = Complex(nd(rng), nd(rng)) / std::sqrt(2.0 * T);

    const auto chain = [&](const Word& w) {
      Eigen::MatrixXcd prod = Eigen::MatrixXcd::Identity(T, T);
      for (int a : w) prod = prod * (a == 0 ? A : Eigen::MatrixXcd(A.adjoint()));
      return prod.trace() / static_cast<double>(T);
    };
    for (const Word& w : {Word{0, 1}, Word{0, 1, 1, 0}, Word{0, 0, 1}, Word{0, 1, 0, 1}}) {
      CAPTURE(T);
      CHECK(std::abs(extract_mixed_moment(A, w) - chain(w)) < 1e-9);
    }
    // a word whose edge multiset admits a second chain: the extracted
    // coefficient is the sum of both (they are trace-equal by cyclicity)
    CHECK(std::abs(extract_mixed_moment(A, {1, 0, 1, 1}) -
                   (chain({1, 0, 1, 1}) + chain({1, 1, 0, 1}))) < 1e-9);
  }
}

TEST_CASE("sandwich solver: A = 0 gives the bare resolvent") {
  SandwichProblem prob;
  prob.A = Eigen::MatrixXcd::Zero(8, 8);
  prob.r = 0.5;
  const Complex z(0.8, 0.3);
  const auto val = solve_sandwich(prob, z);
  CHECK(std::abs(val.g - 1.0 / z) < 1e-9);
  CHECK(!val.inside);
  CHECK(std::abs(val.v) == 0.0);
}

TEST_CASE("sandwich solver reproduces Marchenko-Pastur for A = 1") {
  SandwichProblem prob;
  prob.A = Eigen::MatrixXcd::Identity(24, 24);
  prob.r = 1.0;
  // z = 4 is the spectral edge itself: the w -> 0 limit converges only like a
  // fractional power of w there, so the pinned value holds at ~1e-4
  const auto val = solve_sandwich(prob, {4.0, 0.0});
  CHECK(std::abs(val.g - 0.5) < 2e-4);  // 4G^2 - 4G + 1 = 0

  prob.r = 0.5;
  for (Complex z : {Complex(3.5, 0.8), Complex(1.0, 1.5), Complex(-0.7, 0.9)}) {
    const auto v = solve_sandwich(prob, z);
    CAPTURE(z.real());
    CAPTURE(z.imag());
    CHECK(std::abs(v.g - mp_green(z, prob.r)) < 1e-8);
  }
}

TEST_CASE("full 2x2 residual vanishes at convergence (conjugation symmetry)") {
  // [Q - M_A(r G)] G = 1 must hold in all four entries, not only the two the
  // solver drives: the other two are their conjugates
  const int T = 32;
  SandwichProblem prob;
  prob.A = nilpotent_shift(T, 1);
  prob.scale = 1.0 / (T - 1);  // the Pearson alpha/T prefactor at tau = 1
  prob.r = 0.5;
  const double s = 0.55;
  const auto val = solve_sandwich(prob, {s, 0.0});
  CHECK(val.inside);

  const Complex i(0.0, 1.0);
  Matrix2c G;
  G << val.g, i * std::conj(val.v), i * val.v, std::conj(val.g);
  Matrix2c Q;
  Q << Complex(s, 0.0), i * val.final_w, i * val.final_w, Complex(s, 0.0);
  const Eigen::MatrixXcd A_eff = prob.effective_scale() * T * prob.A;
  const Matrix2c R = (Q - quaternionic_moment_gf(A_eff, prob.r * G)) * G -
                     Matrix2c::Identity();
  CHECK(R.cwiseAbs().maxCoeff() < 1e-8);
  // conjugate pairing of the value entries
  CHECK(std::abs(G(1, 1) - std::conj(G(0, 0))) < 1e-12);
  CHECK(std::abs(G(0, 1) * G(1, 0) + std::norm(val.v)) < 1e-12);
}

TEST_CASE("holomorphic exterior: v -> 0 and 1/z tail with second-moment decay") {
  const int T = 64;
  SandwichProblem prob;
  prob.A = nilpotent_shift(T, 1);
  prob.scale = 1.0 / (T - 1);
  prob.r = 0.5;
  const double s_ext = lagspec::radial::spectral_radii(prob.r).s_ext;

  double dev_prev = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double s = s_ext * 1.3 * (k == 0 ? 1.0 : 2.0);
    const auto val = solve_sandwich(prob, {s, 0.0});
    CHECK(!val.inside);
    CHECK(std::abs(val.v) < 1e-7);
    const double dev = std::abs(val.g - 1.0 / s) * s;
    if (k == 1) {
      // |g - 1/z| |z| should drop by ~4 when |z| doubles
      CHECK(dev < 0.45 * dev_prev);
    }
    dev_prev = dev;
  }
}

TEST_CASE("cyclic unit-lag sandwich matches the unit-lag cubic") {
  const int T = 128;
  SandwichProblem prob;
  prob.A = cyclic_shift(T, 1);
  prob.r = 0.5;  // scale 1/T for the cyclic benchmark
  const double s = 0.6;
  const auto val = solve_sandwich(prob, {s, 0.0});
  CHECK(val.inside);
  const double f = (val.g * s).real();
  const double f_exact = lagspec::lag::unit_lag_cdf(s, prob.r);
  CHECK(std::abs(f - f_exact) < 2e-5);  // discrete unit circle at T = 128
  const double o_exact = lagspec::lag::unit_lag_overlap(s, prob.r);
  CHECK(overlap_from_field(std::abs(val.v)) == doctest::Approx(o_exact).epsilon(2e-3));
}

TEST_CASE("unit-lag field density integrates to 1 over the ring") {
  const int T = 96;
  SandwichProblem prob;
  prob.A = cyclic_shift(T, 1);
  prob.r = 0.5;
  const double s_ext = lagspec::radial::spectral_radii(prob.r).s_ext;
  std::vector<double> grid(36);
  for (size_t i = 0; i < grid.size(); ++i) {
    grid[i] = 0.02 + (s_ext * 0.999 - 0.02) * i / (grid.size() - 1);
  }
  const auto curve = sandwich_radial_curve(prob, grid);
  // trapezoid of rho 2 pi s ds plus the CDF below the first grid point
  double mass = curve.f.front();
  for (size_t i = 0; i + 1 < grid.size(); ++i) {
    mass += 0.5 * (curve.rho[i] * grid[i] + curve.rho[i + 1] * grid[i + 1]) * 2.0 * kPi *
            (grid[i + 1] - grid[i]);
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("density from sampled fields") {
  // holomorphic region: zero density
  CHECK(density_from_field([](Complex z) { return 1.0 / z; }, {1.5, 0.4}, 1e-3) ==
        doctest::Approx(0.0).epsilon(1e-8));
  // uniform disc ansatz g = conj(z): rho = 1/pi
  CHECK(density_from_field([](Complex z) { return std::conj(z); }, {0.2, -0.1}, 1e-3) ==
        doctest::Approx(1.0 / kPi).epsilon(1e-10));
  // refinement instability reported
  CHECK_THROWS_AS(static_cast<void>(density_from_field(
                      [](Complex z) { return std::exp(3.0 * std::conj(z)); }, {0.0, 0.0},
                      1.4)),
                  lagspec::NumericalError);

  CHECK(overlap_from_field(0.0) == 0.0);
  CHECK(overlap_from_field(2.0) == doctest::Approx(4.0 / kPi));
}

TEST_CASE("Sylvester pairing: X A X^dag and A X^dag X share nonzero spectra") {
  const int N = 5, T = 8;
  const Eigen::MatrixXcd X =
      lagspec::mc::sample_gaussian(N, T, lagspec::mc::Field::complex_field, 99, 0);
  const Eigen::MatrixXcd A = nilpotent_shift(T, 2);
  const Eigen::MatrixXcd Y1 = X * A * X.adjoint() / static_cast<double>(T);
  const Eigen::MatrixXcd Y2 = A * X.adjoint() * X / static_cast<double>(T);

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> e1(Y1, false), e2(Y2, false);
  std::vector<Complex> l1, l2;
  for (int i = 0; i < N; ++i) l1.push_back(e1.eigenvalues()(i));
  for (int i = 0; i < T; ++i) l2.push_back(e2.eigenvalues()(i));
  auto nonzero = [](std::vector<Complex> v) {
    v.erase(std::remove_if(v.begin(), v.end(),
                           [](Complex c) { return std::abs(c) < 1e-10; }),
            v.end());
    std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
      return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return v;
  };
  const auto n1 = nonzero(l1), n2 = nonzero(l2);
  REQUIRE(n1.size() == n2.size());
  for (size_t i = 0; i < n1.size(); ++i) CHECK(std::abs(n1[i] - n2[i]) < 1e-9);
}

TEST_CASE("continuation schedule validation") {
  const auto sched = ContinuationSchedule::standard();
  CHECK(sched.w_values.front() == doctest::Approx(0.1));
  CHECK(sched.w_values.back() <= 1e-7);
  for (size_t i = 0; i + 1 < sched.w_values.size(); ++i) {
    CHECK(sched.w_values[i + 1] < sched.w_values[i]);
  }
  ContinuationSchedule bad;
  bad.w_values = {1e-2, 1e-2};
  CHECK_THROWS_AS(bad.validate(), lagspec::UsageError);
}
