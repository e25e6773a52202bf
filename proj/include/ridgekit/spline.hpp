#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "ridgekit/decomp.hpp"
#include "ridgekit/error.hpp"

namespace ridgekit {

/// Natural cubic spline basis of dimension d for one variable: boundary knots
/// at the training min/max, d-1 interior knots at the k/d quantiles, columns
/// centered on the training sample (the model keeps an explicit intercept).
struct SplineBasisSpec {
  int d = 1;
  Vector interior_knots;
  std::array<double, 2> boundary_knots{0.0, 0.0};
  Vector column_offsets;

  Vector all_knots() const {
    Vector k(interior_knots.size() + 2);
    k(0) = boundary_knots[0];
    k.segment(1, interior_knots.size()) = interior_knots;
    k(k.size() - 1) = boundary_knots[1];
    return k;
  }
};

namespace spline_detail {

// Linear-interpolation sample quantile of sorted values.
inline double quantile_sorted(const std::vector<double>& sorted, double prob) {
  const double h = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double cube_plus(double t) {
  return t > 0.0 ? t * t * t : 0.0;
}

// Truncated-power building block of the natural basis for knot index k:
// [(x - xi_k)_+^3 - (x - xi_last)_+^3] / (xi_last - xi_k).
inline double dk(const Vector& knots, Index k, double x) {
  const Index last = knots.size() - 1;
  return (cube_plus(x - knots(k)) - cube_plus(x - knots(last))) /
         (knots(last) - knots(k));
}

// Raw (uncentered) basis: column 0 is x itself, then dk(i) - dk(T-2)
// for i = 0 .. T-3, giving d columns for T = d+1 knots. Linear beyond the
// boundary knots by construction.
inline Matrix raw_basis(const Vector& knots, const Vector& values) {
  const Index t = knots.size();
  const Index d = t - 1;
  Matrix out(values.size(), d);
  out.col(0) = values;
  for (Index c = 1; c < d; ++c)
    for (Index r = 0; r < values.size(); ++r)
      out(r, c) = dk(knots, c - 1, values(r)) - dk(knots, t - 2, values(r));
  return out;
}

}  // namespace spline_detail

inline SplineBasisSpec build_basis(const Vector& values, int d) {
  if (d < 1) throw InvalidInputError("build_basis: d must be >= 1");
  if (!values.allFinite())
    throw InvalidInputError("build_basis: non-finite training values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());
  if (static_cast<int>(distinct.size()) < d + 1)
    throw InvalidInputError(
        "build_basis: needs at least d+1 distinct training values");

  SplineBasisSpec spec;
  spec.d = d;
  spec.boundary_knots = {sorted.front(), sorted.back()};
  spec.interior_knots.resize(d - 1);
  for (int k = 1; k < d; ++k)
    spec.interior_knots(k - 1) = spline_detail::quantile_sorted(
        sorted, static_cast<double>(k) / static_cast<double>(d));

  const Vector knots = spec.all_knots();
  for (Index i = 1; i < knots.size(); ++i)
    if (!(knots(i) > knots(i - 1)))
      throw InvalidInputError(
          "build_basis: knots are not strictly increasing; too many ties in "
          "the training values");

  const Matrix raw = spline_detail::raw_basis(knots, values);
  spec.column_offsets = raw.colwise().mean().transpose();
  return spec;
}

/// Evaluates the centered basis anywhere; extrapolation beyond the boundary
/// knots is linear by naturality.
inline Matrix evaluate_basis(const SplineBasisSpec& spec, const Vector& values) {
  if (!values.allFinite())
    throw InvalidInputError("evaluate_basis: non-finite values");
  Matrix out = spline_detail::raw_basis(spec.all_knots(), values);
  out.rowwise() -= spec.column_offsets.transpose();
  return out;
}

}  // namespace ridgekit
