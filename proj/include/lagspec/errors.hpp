#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace lagspec {

/// Base for all numerical failures; CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No admissible root matched the selector. Carries every candidate so a
/// continuation driver can inspect what was on offer.
class BranchLostError : public NumericalError {
 public:
  BranchLostError(const std::string& what, std::vector<std::complex<double>> candidates)
      : NumericalError(what), candidates_(std::move(candidates)) {}
  const std::vector<std::complex<double>>& candidates() const { return candidates_; }

 private:
  std::vector<std::complex<double>> candidates_;
};

/// Iterative solve did not reach tolerance. Carries the last iterate and its
/// residual norm so callers can back off (smaller step, better seed).
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate,
                   double residual_norm)
      : NumericalError(what),
        last_iterate_(std::move(last_iterate)),
        residual_norm_(residual_norm) {}
  const std::vector<double>& last_iterate() const { return last_iterate_; }
  double residual_norm() const { return residual_norm_; }

 private:
  std::vector<double> last_iterate_;
  double residual_norm_;
};

/// Transform evaluated at (or too close to) one of its poles.
class PoleError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A matrix that must be inverted is numerically singular.
class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// File / format problems; CLI maps these to exit code 4.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input (grids, parameter combinations); CLI maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lagspec
