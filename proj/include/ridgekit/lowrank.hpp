#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <utility>

#include "ridgekit/decomp.hpp"
#include "ridgekit/error.hpp"
#include "ridgekit/rng.hpp"

namespace ridgekit {

/// Partially observed matrix; values are meaningful only where observed.
struct MaskedMatrix {
  Matrix values;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> observed;

  Index observed_count() const {
    return static_cast<Index>(observed.cast<int>().sum());
  }
};

/// Low-rank factorization a b^T produced by the doubly ridged problem.
struct FactorPair {
  Matrix a;
  Matrix b;
  double lambda = 0.0;

  Matrix product() const { return a * b.transpose(); }
};

/// Ratio between the factorization penalty lambda/2 on ||A||_F^2 + ||B||_F^2
/// and the equivalent nuclear-norm soft threshold: the alternating-ridge
/// solution matches soft_threshold_svd at lambda * kThresholdRatio. Pinned by
/// the diagonal-matrix equivalence test.
inline constexpr double kThresholdRatio = 0.5;

/// Convergence failure that carries the last iterate for inspection.
struct FactorConvergenceError : ConvergenceError {
  FactorPair last;
  FactorConvergenceError(const std::string& what, FactorPair iterate)
      : ConvergenceError(what), last(std::move(iterate)) {}
};

/// Best Frobenius approximation of rank at most q: SVD truncation.
inline Matrix best_rank_q(const Matrix& x, Index q) {
  detail::require_finite(x, "best_rank_q");
  if (q < 0) throw InvalidInputError("best_rank_q: negative rank");
  const Index m = std::min(x.rows(), x.cols());
  if (q > m) {
    std::cerr << "best_rank_q: q clamped from " << q << " to " << m << "\n";
    q = m;
  }
  if (q == 0) return Matrix::Zero(x.rows(), x.cols());
  const SvdFactors f = svd_full(x);
  return f.u.leftCols(q) * f.d.head(q).asDiagonal() *
         f.v.leftCols(q).transpose();
}

/// Nuclear-norm proximal step: singular values replaced by (d_i - lambda)_+.
inline Matrix soft_threshold_svd(const Matrix& x, double lambda) {
  detail::require_finite(x, "soft_threshold_svd");
  if (lambda < 0.0)
    throw DomainError("soft_threshold_svd: lambda must be nonnegative");
  const SvdFactors f = svd_full(x);
  const Index m = f.d.size();
  Vector shrunk = (f.d.array() - lambda).max(0.0);
  return f.u.leftCols(m) * shrunk.asDiagonal() * f.v.leftCols(m).transpose();
}

namespace lowrank_detail {

inline Matrix gaussian_init(Index rows, Index q, std::uint64_t seed) {
  Matrix a(rows, q);
  const double scale = 1.0 / std::sqrt(static_cast<double>(q));
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < q; ++k)
      a(i, k) = scale * counter_normal(seed, 1, i, k);
  return a;
}

inline bool converged(const Matrix& current, const Matrix& previous,
                      double tol) {
  return (current - previous).norm() <= tol * previous.norm() + 1e-300;
}

}  // namespace lowrank_detail

/// Alternating ridge regressions for the doubly ridged factorization problem
/// min ||X - A B^T||_F^2 + lambda/2 (||A||_F^2 + ||B||_F^2). Each block update
/// is an exact ridge solve, so the objective is nonincreasing; at convergence
/// the product equals soft_threshold_svd(x, lambda * kThresholdRatio) whenever
/// q covers the thresholded rank.
inline FactorPair alternating_ridge(const Matrix& x, Index q, double lambda,
                                    double tol = 1e-7, int max_iter = 500,
                                    std::uint64_t seed = 0) {
  detail::require_finite(x, "alternating_ridge");
  if (q < 1 || q > std::min(x.rows(), x.cols()))
    throw InvalidInputError("alternating_ridge: q out of range");
  if (!(lambda > 0.0))
    throw InvalidInputError("alternating_ridge: lambda must be positive");
  if (!(tol > 0.0) || max_iter < 1)
    throw InvalidInputError("alternating_ridge: bad tol or max_iter");

  FactorPair pair;
  pair.lambda = lambda;
  pair.a = lowrank_detail::gaussian_init(x.rows(), q, seed);
  pair.b = Matrix::Zero(x.cols(), q);
  const Matrix ridge = 0.5 * lambda * Matrix::Identity(q, q);
  Matrix previous = Matrix::Zero(x.rows(), x.cols());
  for (int it = 0; it < max_iter; ++it) {
    pair.b = Eigen::LDLT<Matrix>(pair.a.transpose() * pair.a + ridge)
                 .solve(pair.a.transpose() * x)
                 .transpose();
    pair.a = Eigen::LDLT<Matrix>(pair.b.transpose() * pair.b + ridge)
                 .solve(pair.b.transpose() * x.transpose())
                 .transpose();
    const Matrix current = pair.product();
    if (it > 0 && lowrank_detail::converged(current, previous, tol))
      return pair;
    previous = current;
  }
  throw FactorConvergenceError(
      "alternating_ridge: no convergence in " + std::to_string(max_iter) +
          " iterations",
      pair);
}

/// Matrix completion by alternating ridge with missing entries excluded from
/// every row and column regression; minimizes
/// ||P_Omega(X - A B^T)||_F^2 + lambda/2 (||A||_F^2 + ||B||_F^2).
inline FactorPair soft_impute(const MaskedMatrix& x, double lambda, Index q,
                              double tol = 1e-7, int max_iter = 500,
                              std::uint64_t seed = 0) {
  const Index m = x.values.rows();
  const Index n = x.values.cols();
  if (x.observed.rows() != m || x.observed.cols() != n)
    throw InvalidInputError("soft_impute: mask shape mismatch");
  if (x.observed_count() == 0)
    throw InvalidInputError("soft_impute: no observed entries");
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j)
      if (x.observed(i, j) && !std::isfinite(x.values(i, j)))
        throw InvalidInputError("soft_impute: non-finite observed entry");
  if (q < 1 || q > std::min(m, n))
    throw InvalidInputError("soft_impute: q out of range");
  if (!(lambda > 0.0))
    throw InvalidInputError("soft_impute: lambda must be positive");

  FactorPair pair;
  pair.lambda = lambda;
  pair.a = lowrank_detail::gaussian_init(m, q, seed);
  pair.b = Matrix::Zero(n, q);
  const Matrix ridge = 0.5 * lambda * Matrix::Identity(q, q);
  Matrix previous = Matrix::Zero(m, n);
  for (int it = 0; it < max_iter; ++it) {
    for (Index j = 0; j < n; ++j) {
      Matrix ata = ridge;
      Vector rhs = Vector::Zero(q);
      for (Index i = 0; i < m; ++i) {
        if (!x.observed(i, j)) continue;
        ata += pair.a.row(i).transpose() * pair.a.row(i);
        rhs += x.values(i, j) * pair.a.row(i).transpose();
      }
      pair.b.row(j) = Eigen::LDLT<Matrix>(ata).solve(rhs).transpose();
    }
    for (Index i = 0; i < m; ++i) {
      Matrix btb = ridge;
      Vector rhs = Vector::Zero(q);
      for (Index j = 0; j < n; ++j) {
        if (!x.observed(i, j)) continue;
        btb += pair.b.row(j).transpose() * pair.b.row(j);
        rhs += x.values(i, j) * pair.b.row(j).transpose();
      }
      pair.a.row(i) = Eigen::LDLT<Matrix>(btb).solve(rhs).transpose();
    }
    const Matrix current = pair.product();
    if (it > 0 && lowrank_detail::converged(current, previous, tol))
      return pair;
    previous = current;
  }
  throw FactorConvergenceError(
      "soft_impute: no convergence in " + std::to_string(max_iter) +
          " iterations",
      pair);
}

}  // namespace ridgekit
