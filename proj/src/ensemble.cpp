#include "lagspec/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include <lapacke.h>

#include "lagspec/errors.hpp"
#include "lagspec/parallel.hpp"
#include "lagspec/rng.hpp"

namespace lagspec::mc {

namespace {

constexpr double kPi = 3.141592653589793238462643383279503;

Eigen::MatrixXcd cyclic_shifted(const Eigen::MatrixXcd& X, int tau) {
  const int T = static_cast<int>(X.cols());
  Eigen::MatrixXcd Y(X.rows(), T);
  for (int t = 0; t < T; ++t) Y.col(t) = X.col((t + tau) % T);
  return Y;
}

}  // namespace

Eigen::MatrixXcd whiten_rows(const Eigen::MatrixXcd& X) {
  const int T = static_cast<int>(X.cols());
  const Eigen::MatrixXcd cov = X * X.adjoint() / static_cast<double>(T);
  Eigen::VectorXd evals;
  Eigen::MatrixXcd evecs;
  dense_eigen_hermitian(cov, evals, &evecs);
  const double lmin = evals.minCoeff();
  const double lmax = evals.maxCoeff();
  if (lmin <= 1e-12 * std::max(lmax, 1.0)) {
    throw SingularityError("whiten_rows: singular equal-time covariance (need N < T)");
  }
  const Eigen::VectorXd inv_sqrt = evals.array().rsqrt();
  return inv_sqrt.asDiagonal() * (evecs.adjoint() * X);
}

void EnsembleSpec::validate() const {
  if (N < 2 || T < 2) throw UsageError("EnsembleSpec: need N, T >= 2");
  if (tau < 0 || tau >= T) throw UsageError("EnsembleSpec: need 0 <= tau < T");
  if (samples < 1) throw UsageError("EnsembleSpec: need samples >= 1");
  if (variant == Variant::whitened_square && N >= T) {
    throw UsageError("EnsembleSpec: whitening needs N < T (singular covariance otherwise)");
  }
}

Eigen::MatrixXcd sample_gaussian(int N, int T, Field field, std::uint64_t seed,
                                 std::uint64_t stream) {
  Eigen::MatrixXcd X(N, T);
  for (int i = 0; i < N; ++i) {
    for (int t = 0; t < T; ++t) {
      const std::uint64_t counter = static_cast<std::uint64_t>(i) * T + t;
      if (field == Field::complex_field) {
        X(i, t) = gaussian_complex(seed, stream, counter);
      } else {
        X(i, t) = gaussian(seed, stream, counter);
      }
    }
  }
  return X;
}

Eigen::MatrixXcd build_lagged(const Eigen::MatrixXcd& X, int tau, bool cyclic) {
  const int T = static_cast<int>(X.cols());
  if (tau < 0 || tau >= T) throw UsageError("build_lagged: need 0 <= tau < T");
  if (cyclic) {
    return X * cyclic_shifted(X, tau).adjoint() / static_cast<double>(T);
  }
  const int width = T - tau;
  return X.leftCols(width) * X.rightCols(width).adjoint() / static_cast<double>(width);
}

void dense_eigen_hermitian(const Eigen::MatrixXcd& H, Eigen::VectorXd& values,
                           Eigen::MatrixXcd* vectors) {
  const int N = static_cast<int>(H.rows());
  Eigen::MatrixXcd work = H;
  values.resize(N);
  const int info = LAPACKE_zheevd(
      LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'L', N,
      reinterpret_cast<lapack_complex_double*>(work.data()), N, values.data());
  if (info != 0) {
    throw NumericalError("dense_eigen_hermitian: zheevd failed with info = " +
                         std::to_string(info));
  }
  if (vectors) *vectors = std::move(work);
}

void dense_eigen(const Eigen::MatrixXcd& C, Eigen::VectorXcd& values,
                 Eigen::MatrixXcd& vectors) {
  const int N = static_cast<int>(C.rows());
  Eigen::MatrixXcd work = C;  // zgeev overwrites its input
  values.resize(N);
  vectors.resize(N, N);
  const int info = LAPACKE_zgeev(
      LAPACK_COL_MAJOR, 'N', 'V', N,
      reinterpret_cast<lapack_complex_double*>(work.data()), N,
      reinterpret_cast<lapack_complex_double*>(values.data()), nullptr, N,
      reinterpret_cast<lapack_complex_double*>(vectors.data()), N);
  if (info != 0) {
    throw NumericalError("dense_eigen: zgeev failed with info = " + std::to_string(info));
  }
}

SpectrumSample eigen_biorthogonal(const Eigen::MatrixXcd& C, double cond_limit) {
  const int N = static_cast<int>(C.rows());
  SpectrumSample out;
  Eigen::MatrixXcd V;
  dense_eigen(C, out.eigenvalues, V);

  const Eigen::MatrixXcd Vinv = V.partialPivLu().inverse();
  const auto norm1 = [](const Eigen::MatrixXcd& M) {
    return M.cwiseAbs().colwise().sum().maxCoeff();
  };
  out.condition = norm1(V) * norm1(Vinv);
  out.biorth_residual =
      (Vinv * V - Eigen::MatrixXcd::Identity(N, N)).cwiseAbs().maxCoeff();
  out.accepted = out.condition <= cond_limit && std::isfinite(out.condition);

  out.overlaps.resize(N);
  for (int i = 0; i < N; ++i) {
    out.overlaps[i] = Vinv.row(i).squaredNorm() * V.col(i).squaredNorm();
  }
  return out;
}

Eigen::MatrixXcd whitened_square(const Eigen::MatrixXcd& X, int tau) {
  // the cyclic shift is unitary on the time index, so the shifted copy shares
  // the equal-time covariance and the same whitening transform applies to
  // both: y' is just x' with shifted columns
  const Eigen::MatrixXcd xw = whiten_rows(X);
  const Eigen::MatrixXcd C = build_lagged(xw, tau, /*cyclic=*/true);
  return C * C.adjoint();
}

Eigen::MatrixXcd symmetrized_sample(const Eigen::MatrixXcd& X, int tau) {
  const Eigen::MatrixXcd C = build_lagged(X, tau, /*cyclic=*/false);
  return 0.5 * (C + C.adjoint());
}

std::vector<SpectrumSample> run_ensemble(const EnsembleSpec& spec) {
  spec.validate();
  std::vector<SpectrumSample> out(spec.samples);

  parallel_for(spec.samples, [&](long k) {
    SpectrumSample sample;
    switch (spec.variant) {
      case Variant::lagged_nilpotent:
      case Variant::lagged_cyclic: {
        const Eigen::MatrixXcd X =
            sample_gaussian(spec.N, spec.T, spec.field, spec.seed, 2 * k);
        const Eigen::MatrixXcd C =
            build_lagged(X, spec.tau, spec.variant == Variant::lagged_cyclic);
        sample = eigen_biorthogonal(C);
        break;
      }
      case Variant::independent_product: {
        const int width = spec.T - spec.tau;
        const Eigen::MatrixXcd A =
            sample_gaussian(spec.N, width, spec.field, spec.seed, 2 * k);
        const Eigen::MatrixXcd B =
            sample_gaussian(spec.N, width, spec.field, spec.seed, 2 * k + 1);
        const Eigen::MatrixXcd C = A * B.adjoint() / static_cast<double>(width);
        sample = eigen_biorthogonal(C);
        break;
      }
      case Variant::symmetrized:
      case Variant::whitened_square: {
        const Eigen::MatrixXcd X =
            sample_gaussian(spec.N, spec.T, spec.field, spec.seed, 2 * k);
        const Eigen::MatrixXcd H = spec.variant == Variant::symmetrized
                                       ? symmetrized_sample(X, spec.tau)
                                       : whitened_square(X, spec.tau);
        Eigen::VectorXd evals;
        dense_eigen_hermitian(H, evals);
        sample.eigenvalues = evals.cast<std::complex<double>>();
        sample.overlaps = Eigen::VectorXd::Ones(spec.N);  // orthonormal basis
        sample.condition = 1.0;
        sample.biorth_residual = 0.0;
        sample.accepted = true;
        break;
      }
    }
    sample.sample_index = k;
    out[k] = std::move(sample);
  });
  return out;
}

namespace {

EmpiricalCurve bin_samples(const std::vector<SpectrumSample>& samples,
                           const BinningOptions& opts) {
  if (samples.empty()) throw UsageError("empirical curve: no samples");
  EmpiricalCurve curve;

  double s_max = opts.s_max;
  if (s_max <= 0.0) {
    double m = 0.0;
    for (const auto& s : samples) {
      if (!s.accepted) continue;
      for (int i = 0; i < s.eigenvalues.size(); ++i) {
        m = std::max(m, std::abs(s.eigenvalues[i]));
      }
    }
    s_max = 1.1 * m;
  }
  const int bins = opts.bins;
  curve.edges.resize(bins + 1);
  curve.centers.resize(bins);
  for (int k = 0; k <= bins; ++k) curve.edges[k] = s_max * k / bins;
  for (int k = 0; k < bins; ++k) curve.centers[k] = 0.5 * (curve.edges[k] + curve.edges[k + 1]);

  curve.counts.assign(bins, 0);
  curve.density.assign(bins, 0.0);
  curve.overlap.assign(bins, 0.0);
  curve.cdf.assign(bins, 0.0);

  long N = 0;
  long accepted = 0;
  std::vector<double> overlap_sums(bins, 0.0);
  std::vector<long> below_center(bins, 0);

  for (const auto& s : samples) {
    if (!s.accepted) {
      ++curve.rejected_samples;
      continue;
    }
    ++accepted;
    N = s.eigenvalues.size();
    const bool has_overlaps = s.overlaps.size() == s.eigenvalues.size();
    for (int i = 0; i < s.eigenvalues.size(); ++i) {
      const std::complex<double> lam = s.eigenvalues[i];
      if (opts.exclude_real_axis && std::abs(lam.imag()) < 1e-8) continue;
      const double mod = std::abs(lam);
      for (int k = 0; k < bins; ++k) {
        if (mod <= curve.centers[k]) ++below_center[k];
      }
      const int k = std::min(static_cast<int>(mod / s_max * bins), bins - 1);
      if (mod <= s_max) {
        ++curve.counts[k];
        if (has_overlaps) overlap_sums[k] += s.overlaps[i];
      }
    }
  }
  if (accepted == 0) throw NumericalError("empirical curve: every sample was rejected");

  curve.total_samples = accepted;
  const double nd = static_cast<double>(N);
  for (int k = 0; k < bins; ++k) {
    const double area = kPi * (curve.edges[k + 1] * curve.edges[k + 1] -
                               curve.edges[k] * curve.edges[k]);
    curve.density[k] = curve.counts[k] / (accepted * nd * area);
    curve.overlap[k] = overlap_sums[k] / (accepted * nd * nd * area);
    curve.cdf[k] = below_center[k] / (accepted * nd);
  }
  return curve;
}

}  // namespace

EmpiricalCurve empirical_radial(const std::vector<SpectrumSample>& samples,
                                const BinningOptions& opts) {
  return bin_samples(samples, opts);
}

EmpiricalCurve empirical_overlap(const std::vector<SpectrumSample>& samples,
                                 const BinningOptions& opts) {
  for (const auto& s : samples) {
    if (s.accepted && s.overlaps.size() != s.eigenvalues.size()) {
      throw UsageError("empirical_overlap: samples carry no overlaps");
    }
  }
  return bin_samples(samples, opts);
}

}  // namespace lagspec::mc
