#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace lagspec::mc {

enum class Field { complex_field, real_field };

enum class Variant {
  lagged_nilpotent,   // C = X D X^dag / (T - tau), true truncated shift
  lagged_cyclic,      // C = X D X^dag / T, periodic shift (quasi-1d benchmarks)
  symmetrized,        // (C + C^dag)/2 of the nilpotent Pearson estimator
  whitened_square,    // C' C'^dag after whitening both factors
  independent_product // two fresh Gaussian blocks, the tau >= T/2 benchmark
};

struct EnsembleSpec {
  int N = 0;
  int T = 0;
  int tau = 1;
  Field field = Field::complex_field;
  Variant variant = Variant::lagged_nilpotent;
  int samples = 1;
  std::uint64_t seed = 0;

  double r() const { return static_cast<double>(N) / T; }
  void validate() const;
};

/// One Monte-Carlo draw: eigenvalues plus (for non-Hermitian variants) the
/// diagonal overlaps O_ii = <L_i|L_i><R_i|R_i> >= 1.
struct SpectrumSample {
  Eigen::VectorXcd eigenvalues;
  Eigen::VectorXd overlaps;  // empty when not computed (Hermitian variants: all 1)
  long sample_index = -1;
  double condition = 0.0;        // ||V||_1 ||V^-1||_1 estimate
  double biorth_residual = 0.0;  // max |V^-1 V - 1|
  bool accepted = true;
};

/// Binned radial statistics. Empty bins keep count 0 and are never
/// interpolated over.
struct EmpiricalCurve {
  std::vector<double> edges;    // bins + 1 ascending
  std::vector<double> centers;  // bin centers
  std::vector<long> counts;
  std::vector<double> density;  // counts/(samples N area_k)
  std::vector<double> overlap;  // sum O_ii/(samples N^2 area_k)
  std::vector<double> cdf;      // exact fraction |lambda| <= center
  long total_samples = 0;
  long rejected_samples = 0;
};

/// i.i.d. Gaussian data matrix: complex entries have Re, Im ~ N(0, 1/2); real
/// entries ~ N(0, 1). The draw is a pure function of (seed, stream, entry), so
/// results do not depend on evaluation order or worker count.
Eigen::MatrixXcd sample_gaussian(int N, int T, Field field, std::uint64_t seed,
                                 std::uint64_t stream);

/// C = X D X^dag with the shift applied as a column window (D itself is never
/// materialized). Nilpotent uses the Pearson 1/(T - tau); cyclic uses 1/T.
Eigen::MatrixXcd build_lagged(const Eigen::MatrixXcd& X, int tau, bool cyclic);

/// Narrow interface over the established dense solver (LAPACK zgeev):
/// eigenvalues and right eigenvectors of a general complex matrix.
void dense_eigen(const Eigen::MatrixXcd& C, Eigen::VectorXcd& values,
                 Eigen::MatrixXcd& vectors);

/// Hermitian counterpart (LAPACK zheevd): ascending real eigenvalues, and
/// optionally the orthonormal eigenvectors.
void dense_eigen_hermitian(const Eigen::MatrixXcd& H, Eigen::VectorXd& values,
                           Eigen::MatrixXcd* vectors = nullptr);

/// Full non-Hermitian decomposition with biorthogonal left eigenvectors taken
/// as the rows of V^{-1} (so <L_i|R_j> = delta_ij holds by construction) and
/// O_ii = ||row_i V^{-1}||^2 ||col_i V||^2. Samples with an estimated
/// eigenvector condition number above cond_limit are marked rejected.
SpectrumSample eigen_biorthogonal(const Eigen::MatrixXcd& C, double cond_limit = 1e12);

/// Rescales the rows so the equal-time covariance X X^dag / T becomes the
/// identity exactly. Throws SingularityError on a singular covariance.
Eigen::MatrixXcd whiten_rows(const Eigen::MatrixXcd& X);

/// Hermitian C' C'^dag of the whitened pair (both equal-time covariances
/// mapped to the identity). Throws SingularityError if a covariance is not
/// invertible (requires N < T).
Eigen::MatrixXcd whitened_square(const Eigen::MatrixXcd& X, int tau);

/// (C + C^dag)/2 of the nilpotent Pearson estimator: Hermitian, real spectrum.
Eigen::MatrixXcd symmetrized_sample(const Eigen::MatrixXcd& X, int tau);

/// Runs the whole pipeline (generate -> build -> decompose -> measure) for
/// every sample of the spec; per-sample work is independent and the result
/// vector is keyed by sample index.
std::vector<SpectrumSample> run_ensemble(const EnsembleSpec& spec);

struct BinningOptions {
  int bins = 64;
  double s_max = 0.0;          // <= 0: 1.1 * max |lambda| over samples
  bool exclude_real_axis = false;  // drop |Im| < 1e-8 (real-field ensembles)
};

/// Radial density histogram (annular area normalization, per-N convention).
EmpiricalCurve empirical_radial(const std::vector<SpectrumSample>& samples,
                                const BinningOptions& opts);

/// Radial overlap correlator histogram with the 1/N^2 normalization.
EmpiricalCurve empirical_overlap(const std::vector<SpectrumSample>& samples,
                                 const BinningOptions& opts);

}  // namespace lagspec::mc
