#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "lagspec/ensemble.hpp"
#include "lagspec/errors.hpp"
#include "lagspec/radial.hpp"
#include "lagspec/transforms.hpp"

using namespace lagspec::mc;

namespace {
constexpr double kPi = 3.141592653589793238462643383279503;
}

TEST_CASE("gaussian sampling: determinism and entry statistics") {
  const auto X1 = sample_gaussian(64, 96, Field::complex_field, 12345, 7);
  const auto X2 = sample_gaussian(64, 96, Field::complex_field, 12345, 7);
  CHECK((X1 - X2).cwiseAbs().maxCoeff() == 0.0);  // bit-identical
  const auto X3 = sample_gaussian(64, 96, Field::complex_field, 12345, 8);
  CHECK((X1 - X3).cwiseAbs().maxCoeff() > 0.0);

  const auto X = sample_gaussian(512, 1024, Field::complex_field, 2024, 0);
  const double mean_sq = X.cwiseAbs2().mean();
  CHECK(mean_sq == doctest::Approx(1.0).epsilon(0.01));

  // second cumulant <X X> vanishes for the complex field (3 sigma)
  const std::complex<double> mean_xx = X.array().square().mean();
  const double sigma = std::sqrt(2.0 / static_cast<double>(X.size()));
  CHECK(std::abs(mean_xx) < 3.0 * sigma);

  const auto XR = sample_gaussian(256, 512, Field::real_field, 99, 0);
  CHECK(XR.imag().cwiseAbs().maxCoeff() == 0.0);
  CHECK(XR.real().array().square().mean() == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("lagged construction: Wishart limit and trace identity") {
  const auto X = sample_gaussian(48, 80, Field::complex_field, 5, 0);
  const auto W = build_lagged(X, 0, false);
  CHECK((W - W.adjoint()).cwiseAbs().maxCoeff() < 1e-14);

  const int tau = 3;
  const auto C = build_lagged(X, tau, false);
  std::complex<double> direct(0.0, 0.0);
  for (int i = 0; i < X.rows(); ++i) {
    for (int t = 0; t + tau < X.cols(); ++t) {
      direct += X(i, t) * std::conj(X(i, t + tau));
    }
  }
  direct /= static_cast<double>(X.cols() - tau);
  CHECK(std::abs(C.trace() - direct) < 1e-12);

  // cyclic variant keeps all T columns with the 1/T prefactor
  const auto Ccyc = build_lagged(X, tau, true);
  std::complex<double> direct_cyc(0.0, 0.0);
  for (int i = 0; i < X.rows(); ++i) {
    for (int t = 0; t < X.cols(); ++t) {
      direct_cyc += X(i, t) * std::conj(X(i, (t + tau) % X.cols()));
    }
  }
  direct_cyc /= static_cast<double>(X.cols());
  CHECK(std::abs(Ccyc.trace() - direct_cyc) < 1e-12);
}

TEST_CASE("biorthogonal decomposition: Hermitian input has unit overlaps") {
  const auto X = sample_gaussian(40, 40, Field::complex_field, 11, 0);
  const Eigen::MatrixXcd H = 0.5 * (X + X.adjoint());
  const auto sample = eigen_biorthogonal(H);
  CHECK(sample.accepted);
  CHECK(sample.biorth_residual < 1e-8);
  for (int i = 0; i < sample.overlaps.size(); ++i) {
    CHECK(sample.overlaps[i] == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("biorthogonal decomposition: Jordan-near 2x2 oracle") {
  const double delta = 1e-4;
  Eigen::MatrixXcd C(2, 2);
  C << 0.0, 1.0, delta, 0.0;
  const auto sample = eigen_biorthogonal(C);
  const double expected = (1.0 + delta) * (1.0 + delta) / (4.0 * delta);
  for (int i = 0; i < 2; ++i) {
    CHECK(sample.overlaps[i] == doctest::Approx(expected).epsilon(1e-6));
  }
  CHECK(sample.overlaps.minCoeff() >= 100.0);
}

TEST_CASE("lagged ensemble: overlaps bounded below by 1, biorthogonality holds") {
  EnsembleSpec spec;
  spec.N = 64;
  spec.T = 128;
  spec.tau = 1;
  spec.samples = 4;
  spec.seed = 31;
  const auto samples = run_ensemble(spec);
  for (const auto& s : samples) {
    REQUIRE(s.accepted);
    REQUIRE(s.eigenvalues.size() == spec.N);
    CHECK(s.biorth_residual < 1e-8);
    CHECK(s.overlaps.minCoeff() >= 1.0 - 1e-9);
    CHECK(s.overlaps.sum() >= static_cast<double>(spec.N));
  }
}

TEST_CASE("empirical curves: counting identities and estimator exactness") {
  EnsembleSpec spec;
  spec.N = 48;
  spec.T = 96;
  spec.tau = 1;
  spec.samples = 6;
  spec.seed = 17;
  const auto samples = run_ensemble(spec);

  BinningOptions opts;
  opts.bins = 32;
  const auto curve = empirical_radial(samples, opts);
  REQUIRE(curve.counts.size() == 32);

  // density integrates (annular measure) back to the counted fraction
  double mass = 0.0;
  long total = 0;
  for (int k = 0; k < 32; ++k) {
    const double area =
        kPi * (curve.edges[k + 1] * curve.edges[k + 1] - curve.edges[k] * curve.edges[k]);
    mass += curve.density[k] * area;
    total += curve.counts[k];
  }
  CHECK(mass == doctest::Approx(static_cast<double>(total) /
                                (curve.total_samples * spec.N))
                    .epsilon(1e-12));
  CHECK(total == curve.total_samples * spec.N);  // s_max covers everything

  // overlap estimator: integral equals the plain sample mean of sum O_ii/N^2
  const auto ocurve = empirical_overlap(samples, opts);
  double omass = 0.0;
  for (int k = 0; k < 32; ++k) {
    const double area =
        kPi * (ocurve.edges[k + 1] * ocurve.edges[k + 1] - ocurve.edges[k] * ocurve.edges[k]);
    omass += ocurve.overlap[k] * area;
  }
  double direct = 0.0;
  for (const auto& s : samples) direct += s.overlaps.sum();
  direct /= static_cast<double>(samples.size()) * spec.N * spec.N;
  CHECK(omass == doctest::Approx(direct).epsilon(1e-12));

  // the exact CDF at bin centers is monotone and ends at 1
  for (size_t k = 1; k < curve.cdf.size(); ++k) CHECK(curve.cdf[k] >= curve.cdf[k - 1]);
  CHECK(curve.cdf.back() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("aggregation is independent of the worker count") {
  EnsembleSpec spec;
  spec.N = 32;
  spec.T = 64;
  spec.tau = 1;
  spec.samples = 8;
  spec.seed = 77;

  setenv("LAGSPEC_THREADS", "1", 1);
  const auto s1 = run_ensemble(spec);
  setenv("LAGSPEC_THREADS", "4", 1);
  const auto s4 = run_ensemble(spec);
  unsetenv("LAGSPEC_THREADS");

  REQUIRE(s1.size() == s4.size());
  for (size_t k = 0; k < s1.size(); ++k) {
    CHECK((s1[k].eigenvalues - s4[k].eigenvalues).cwiseAbs().maxCoeff() == 0.0);
    CHECK((s1[k].overlaps - s4[k].overlaps).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("whitening: exact projector property and free-Jacobi shape") {
  const int N = 48, T = 192, tau = 1;
  const auto X = sample_gaussian(N, T, Field::complex_field, 3, 0);
  const auto H = whitened_square(X, tau);
  CHECK((H - H.adjoint()).cwiseAbs().maxCoeff() < 1e-12);

  // whitened equal-time covariance is the identity by construction
  const auto Xw = whiten_rows(X);
  CHECK((Xw * Xw.adjoint() / static_cast<double>(T) - Eigen::MatrixXcd::Identity(N, N))
            .cwiseAbs()
            .maxCoeff() < 1e-10);

  // eigenvalues live in [0, ~4r(1-r)] with r = N/T = 0.25
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
  CHECK(es.eigenvalues().maxCoeff() < 4.0 * 0.25 * 0.75 + 0.2);

  EnsembleSpec bad;
  bad.N = 64;
  bad.T = 32;
  bad.tau = 1;
  bad.variant = Variant::whitened_square;
  CHECK_THROWS_AS(bad.validate(), lagspec::UsageError);
}

TEST_CASE("symmetrized ensemble: Hermitian with near-zero mean eigenvalue") {
  const auto X = sample_gaussian(128, 256, Field::complex_field, 8, 0);
  const auto H = symmetrized_sample(X, 1);
  CHECK((H - H.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(std::abs(H.trace().real()) / 128.0 < 0.05);  // Tr D = 0 up to noise
}

TEST_CASE("independent product matches the tau >= T/2 lagged ensemble") {
  EnsembleSpec lag;
  lag.N = 96;
  lag.T = 192;
  lag.tau = 96;
  lag.samples = 16;
  lag.seed = 5;
  EnsembleSpec prod = lag;
  prod.variant = Variant::independent_product;
  prod.seed = 6;

  const auto s_lag = run_ensemble(lag);
  const auto s_prod = run_ensemble(prod);
  BinningOptions opts;
  opts.bins = 24;
  opts.s_max = 1.3;
  const auto c_lag = empirical_radial(s_lag, opts);
  const auto c_prod = empirical_radial(s_prod, opts);
  double sup = 0.0;
  for (size_t k = 0; k < c_lag.cdf.size(); ++k) {
    sup = std::max(sup, std::abs(c_lag.cdf[k] - c_prod.cdf[k]));
  }
  CHECK(sup < 0.05);  // same law up to sampling noise
}

TEST_CASE("real field: real-axis excess exists and can be excluded") {
  EnsembleSpec spec;
  spec.N = 64;
  spec.T = 128;
  spec.tau = 1;
  spec.field = Field::real_field;
  spec.samples = 2;
  spec.seed = 21;
  const auto samples = run_ensemble(spec);
  long on_axis = 0;
  for (const auto& s : samples) {
    for (int i = 0; i < s.eigenvalues.size(); ++i) {
      if (std::abs(s.eigenvalues[i].imag()) < 1e-8) ++on_axis;
    }
  }
  CHECK(on_axis > 0);

  BinningOptions opts;
  opts.bins = 16;
  opts.exclude_real_axis = true;
  const auto curve = empirical_radial(samples, opts);
  long binned = std::accumulate(curve.counts.begin(), curve.counts.end(), 0L);
  CHECK(binned == spec.samples * spec.N - on_axis);
}

TEST_CASE("finite-size tail: nearly all eigenvalues inside 1.05 s_ext at N = 512") {
  EnsembleSpec spec;
  spec.N = 512;
  spec.T = 1024;
  spec.tau = 1;
  spec.samples = 6;
  spec.seed = 777;
  const auto samples = run_ensemble(spec);
  const double cutoff = 1.05 * lagspec::radial::spectral_radii(0.5).s_ext;
  long inside = 0, total = 0;
  for (const auto& s : samples) {
    for (int i = 0; i < s.eigenvalues.size(); ++i) {
      ++total;
      if (std::abs(s.eigenvalues[i]) <= cutoff) ++inside;
    }
  }
  CHECK(static_cast<double>(inside) / total >= 0.995);
}

TEST_CASE("symmetrized second moment matches the quartic law") {
  // (1/N) E Tr C_sym^2 vs the r/2 second moment of the analytic density
  const int N = 256, T = 512;
  double second = 0.0;
  const int reps = 6;
  for (int k = 0; k < reps; ++k) {
    const auto X = sample_gaussian(N, T, Field::complex_field, 400 + k, k);
    const auto H = symmetrized_sample(X, 1);
    second += H.squaredNorm() / static_cast<double>(N);
  }
  second /= reps;
  CHECK(second == doctest::Approx(0.5 / 2.0).epsilon(0.02));
}
