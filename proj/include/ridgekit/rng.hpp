#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace ridgekit {

// Counter-based random draws: every value is a pure function of
// (seed, stream, row, col), so parallel generation of any subset of an
// array is bit-identical to sequential generation.

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t row, std::uint64_t col) {
  std::uint64_t h = detail::mix64(seed ^ 0x243f6a8885a308d3ULL);
  h = detail::mix64(h ^ stream);
  h = detail::mix64(h ^ row);
  h = detail::mix64(h ^ col);
  return h;
}

/// Uniform draw in the open interval (0, 1).
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t row, std::uint64_t col) {
  const std::uint64_t bits = counter_hash(seed, stream, row, col) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Standard normal draw via Box-Muller on two decorrelated uniforms.
inline double counter_normal(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t row, std::uint64_t col) {
  const double u1 = counter_uniform(seed, 2 * stream, row, col);
  const double u2 = counter_uniform(seed, 2 * stream + 1, row, col);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

/// Deterministic Fisher-Yates permutation of {0, ..., n-1} driven by the
/// counter stream; used for seeded fold assignment.
inline std::vector<std::size_t> counter_permutation(std::uint64_t seed,
                                                    std::size_t n) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::uint64_t h = counter_hash(seed, 0xfedc, i, 0);
    const std::size_t j = static_cast<std::size_t>(h % i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace ridgekit
