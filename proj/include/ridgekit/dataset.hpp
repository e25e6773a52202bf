#pragma once

#include <optional>
#include <utility>

#include "ridgekit/decomp.hpp"
#include "ridgekit/error.hpp"

namespace ridgekit {

/// Design matrix with response. When column_means / y_mean are present the
/// stored x and y are the centered versions and the metadata carries what was
/// removed, so an unpenalized intercept can be recovered after fitting.
/// standardized additionally means every stored column has unit l2 norm,
/// with the original norms kept in column_scales.
struct Dataset {
  Matrix x;
  Vector y;
  std::optional<Vector> column_means;
  std::optional<Vector> column_scales;
  std::optional<double> y_mean;
  bool standardized = false;

  Index n() const { return x.rows(); }
  Index p() const { return x.cols(); }
};

inline Dataset make_dataset(Matrix x, Vector y) {
  if (x.rows() != y.size())
    throw InvalidInputError("make_dataset: x and y row counts differ");
  if (x.rows() < 1) throw InvalidInputError("make_dataset: empty dataset");
  return Dataset{std::move(x), std::move(y), std::nullopt, std::nullopt,
                 std::nullopt, false};
}

/// Center x and y upfront; the intercept is recovered after the penalized fit.
inline Dataset centered(const Dataset& data) {
  Dataset out = data;
  Vector means = data.x.colwise().mean();
  out.x = data.x.rowwise() - means.transpose();
  out.column_means = std::move(means);
  const double ym = data.y.mean();
  out.y = data.y.array() - ym;
  out.y_mean = ym;
  return out;
}

/// Center, then scale every column to unit l2 norm. Constant columns keep
/// scale 1 so the transform stays invertible.
inline Dataset standardized(const Dataset& data) {
  Dataset out = centered(data);
  Vector scales(out.p());
  for (Index j = 0; j < out.p(); ++j) {
    const double nrm = out.x.col(j).norm();
    scales(j) = nrm > 0.0 ? nrm : 1.0;
    out.x.col(j) /= scales(j);
  }
  out.column_scales = std::move(scales);
  out.standardized = true;
  return out;
}

/// Applies a dataset's centering/standardization to fresh rows in original
/// units, producing rows in the stored design's coordinates.
inline Matrix transform_like(const Dataset& data, const Matrix& x_raw) {
  if (x_raw.cols() != data.p())
    throw InvalidInputError("transform_like: column count mismatch");
  Matrix out = x_raw;
  if (data.column_means)
    out.rowwise() -= data.column_means->transpose();
  if (data.column_scales)
    out = out * data.column_scales->cwiseInverse().asDiagonal();
  return out;
}

/// Intercept implied by centering metadata for coefficients expressed in the
/// stored design's coordinates; nullopt for raw datasets.
inline std::optional<double> recover_intercept(const Dataset& data,
                                               const Vector& coefficients) {
  if (!data.y_mean) return std::nullopt;
  Vector original_units = coefficients;
  if (data.column_scales)
    original_units = original_units.cwiseQuotient(*data.column_scales);
  double b0 = *data.y_mean;
  if (data.column_means) b0 -= data.column_means->dot(original_units);
  return b0;
}

}  // namespace ridgekit
