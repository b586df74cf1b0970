#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace lagspec::mc {

// Counter-based Gaussian stream. Every variate is a pure function of
// (seed, stream, counter), so parallel workers can draw disjoint pieces of the
// same logical stream in any order and still produce identical ensembles.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix3(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ stream);
  h = splitmix64(h ^ counter);
  return h;
}

// uniform in (0, 1]; never 0 so log() below is safe
inline double uniform_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace detail

/// One standard normal per counter via Box-Muller on two hashed uniforms.
inline double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const double u1 = detail::uniform_open(detail::mix3(seed, stream, 2 * counter));
  const double u2 = detail::uniform_open(detail::mix3(seed, stream, 2 * counter + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

/// Standard complex normal: Re, Im ~ N(0, 1/2) each, so E|z|^2 = 1.
inline std::complex<double> gaussian_complex(std::uint64_t seed, std::uint64_t stream,
                                             std::uint64_t counter) {
  const double u1 = detail::uniform_open(detail::mix3(seed, stream, 2 * counter));
  const double u2 = detail::uniform_open(detail::mix3(seed, stream, 2 * counter + 1));
  const double rad = std::sqrt(-std::log(u1));  // sqrt(-2 log u) / sqrt(2)
  const double ang = 6.283185307179586476925286766559 * u2;
  return {rad * std::cos(ang), rad * std::sin(ang)};
}

}  // namespace lagspec::mc
