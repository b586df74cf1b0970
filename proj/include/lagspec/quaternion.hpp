#pragma once

#include <Eigen/Dense>
#include <complex>

namespace lagspec::qgf {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;

/// 2x2 complex matrix representation of a quaternion with imaginary units on
/// the off-diagonal:
///
///   [[ a, i conj(b) ],
///    [ i b, conj(a) ]]
///
/// Arguments of generalized Green's functions take (a, b) = (z, w); values
/// take (a, b) = (g, v). The set is closed under +, *, and inversion.
struct Quaternion2 {
  Complex a{0.0, 0.0};
  Complex b{0.0, 0.0};

  static Quaternion2 argument(Complex z, Complex w) { return {z, w}; }
  static Quaternion2 identity() { return {{1.0, 0.0}, {0.0, 0.0}}; }

  Matrix2c matrix() const {
    Matrix2c m;
    const Complex i(0.0, 1.0);
    m << a, i * std::conj(b), i * b, std::conj(a);
    return m;
  }

  /// det = |a|^2 + |b|^2 (the quaternion norm squared)
  double norm2() const { return std::norm(a) + std::norm(b); }

  Quaternion2 inverse() const {
    const double n = norm2();
    return {std::conj(a) / n, -b / n};
  }

  friend Quaternion2 operator+(const Quaternion2& x, const Quaternion2& y) {
    return {x.a + y.a, x.b + y.b};
  }
  friend Quaternion2 operator-(const Quaternion2& x, const Quaternion2& y) {
    return {x.a - y.a, x.b - y.b};
  }
  friend Quaternion2 operator*(const Quaternion2& x, const Quaternion2& y) {
    // block multiply of the 2x2 forms, which stays in the set
    return {x.a * y.a - std::conj(x.b) * y.b,
            x.b * y.a + std::conj(x.a) * y.b};
  }
};

}  // namespace lagspec::qgf
