#pragma once

#include <cmath>
#include <optional>
#include <variant>

#include "ridgekit/dataset.hpp"
#include "ridgekit/decomp.hpp"
#include "ridgekit/error.hpp"
#include "ridgekit/ridge.hpp"

namespace ridgekit {

struct LinearKernel {};
struct RbfKernel {
  double gamma = 1.0;
};
struct PolynomialKernel {
  int degree = 2;
  double offset = 1.0;
};
using KernelKind = std::variant<LinearKernel, RbfKernel, PolynomialKernel>;

struct KernelMatrix {
  Matrix entries;
  KernelKind kind;
};

/// Dual-coefficient fit. theta holds the Cholesky coordinates theta = R alpha
/// (K = R^T R) when K admitted a Cholesky factorization.
struct KernelFit {
  Vector alpha;
  std::optional<Vector> theta;
  std::optional<double> intercept;
  double lambda = 0.0;
  KernelKind kind;
};

namespace detail {

inline void validate_kernel(const KernelKind& kind) {
  if (const auto* rbf = std::get_if<RbfKernel>(&kind)) {
    if (!(rbf->gamma > 0.0))
      throw DomainError("rbf kernel: gamma must be positive");
  } else if (const auto* poly = std::get_if<PolynomialKernel>(&kind)) {
    if (poly->degree < 1)
      throw DomainError("polynomial kernel: degree must be >= 1");
    if (poly->offset < 0.0)
      throw DomainError("polynomial kernel: offset must be >= 0");
  }
}

inline double kernel_value(const KernelKind& kind, double dot, double sqdist) {
  if (std::holds_alternative<LinearKernel>(kind)) return dot;
  if (const auto* rbf = std::get_if<RbfKernel>(&kind))
    return std::exp(-rbf->gamma * sqdist);
  const auto& poly = std::get<PolynomialKernel>(kind);
  return std::pow(dot + poly.offset, poly.degree);
}

}  // namespace detail

/// Pairwise kernel evaluations between the rows of a and of b.
inline Matrix cross_gram(const Matrix& a, const Matrix& b,
                         const KernelKind& kind) {
  detail::validate_kernel(kind);
  detail::require_finite(a, "cross_gram");
  detail::require_finite(b, "cross_gram");
  if (a.cols() != b.cols())
    throw InvalidInputError("cross_gram: feature dimensions differ");
  Matrix out(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j) {
      const double dot = a.row(i).dot(b.row(j));
      const double sq = (a.row(i) - b.row(j)).squaredNorm();
      out(i, j) = detail::kernel_value(kind, dot, sq);
    }
  return out;
}

/// n-by-n gram matrix of the dataset's rows. The result is exactly symmetric
/// (upper triangle mirrored) and RBF diagonals are exactly 1.
inline KernelMatrix gram(const Dataset& data, const KernelKind& kind) {
  detail::validate_kernel(kind);
  detail::require_finite(data.x, "gram");
  const Index n = data.n();
  Matrix k(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      const double dot = data.x.row(i).dot(data.x.row(j));
      const double sq =
          i == j ? 0.0 : (data.x.row(i) - data.x.row(j)).squaredNorm();
      k(i, j) = detail::kernel_value(kind, dot, sq);
      k(j, i) = k(i, j);
    }
  }
  return KernelMatrix{std::move(k), kind};
}

namespace detail {

/// Upper Cholesky factor of k with a single jitter retry of
/// 1e-10 * trace(k)/n on the diagonal; nullopt if both attempts fail.
inline std::optional<Matrix> cholesky_upper_jittered(const Matrix& k) {
  if (auto r = cholesky_upper(k)) return r;
  Matrix bumped = k;
  bumped.diagonal().array() += 1e-10 * k.trace() / static_cast<double>(k.rows());
  return cholesky_upper(bumped);
}

}  // namespace detail

/// Kernel ridge regression: alpha = (K + lambda I)^{-1} y. The fit vector is
/// K alpha.
inline KernelFit kernel_ridge(const KernelMatrix& k, const Vector& y,
                              double lambda) {
  detail::require_positive_lambda(lambda, "kernel_ridge");
  if (y.size() != k.entries.rows())
    throw InvalidInputError("kernel_ridge: y length mismatch");
  Matrix shifted = k.entries;
  shifted.diagonal().array() += lambda;
  Vector alpha = Eigen::LDLT<Matrix>(shifted).solve(y);
  KernelFit fit{std::move(alpha), std::nullopt, std::nullopt, lambda, k.kind};
  if (auto r = detail::cholesky_upper_jittered(k.entries))
    fit.theta = *r * fit.alpha;
  return fit;
}

inline Vector kernel_fits(const KernelMatrix& k, const KernelFit& fit) {
  Vector eta = k.entries * fit.alpha;
  if (fit.intercept) eta.array() += *fit.intercept;
  return eta;
}

/// Kernel prediction at fresh rows x0 (original units of the training data).
inline Vector kernel_predict(const Dataset& data, const KernelFit& fit,
                             const Matrix& x0) {
  Vector eta = cross_gram(x0, data.x, fit.kind) * fit.alpha;
  if (fit.intercept) eta.array() += *fit.intercept;
  return eta;
}

/// Maps a linear-kernel fit back to primal coefficients via the thin QR of
/// X^T: beta = Q theta, where R coincides with the Cholesky factor of X X^T.
inline RidgeFit primal_recover(const Dataset& data, const KernelFit& fit) {
  if (!std::holds_alternative<LinearKernel>(fit.kind))
    throw DomainError("primal_recover: only linear-kernel fits map to primal "
                      "coefficients");
  if (!fit.theta)
    throw InvalidInputError(
        "primal_recover: fit carries no Cholesky coordinates");
  const QrFactors qr = qr_thin(data.x.transpose());
  if (fit.theta->size() != qr.q.cols())
    throw InvalidInputError(
        "primal_recover: dataset shape does not match the fit (requires "
        "p >= n so that X^T has a full thin QR)");
  RidgeFit out;
  out.lambda = fit.lambda;
  out.coefficients = qr.q * *fit.theta;
  out.intercept = fit.intercept;
  return out;
}

}  // namespace ridgekit
