#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "ridgekit/dataset.hpp"
#include "ridgekit/decomp.hpp"
#include "ridgekit/error.hpp"
#include "ridgekit/ridge.hpp"
#include "ridgekit/rng.hpp"

namespace ridgekit {

/// The hat matrix R^lambda = U S(lambda) U^T, kept in diagonal shrinkage form
/// so leverages, fits and traces are available for every lambda from one SVD.
struct RidgeOperator {
  SvdFactors factors;

  Vector shrinkage(double lambda) const {
    Vector s(factors.d.size());
    for (Index j = 0; j < s.size(); ++j) {
      const double dj2 = factors.d(j) * factors.d(j);
      s(j) = dj2 / (dj2 + lambda);
    }
    return s;
  }

  /// Diagonal entries R^lambda_ii.
  Vector leverages(double lambda) const {
    const Vector s = shrinkage(lambda);
    const Index n = factors.rows();
    Vector lev = Vector::Zero(n);
    for (Index j = 0; j < s.size(); ++j)
      lev += s(j) * factors.u.col(j).cwiseAbs2();
    return lev;
  }

  Vector apply(double lambda, const Vector& y) const {
    const Vector s = shrinkage(lambda);
    const Index m = s.size();
    const Vector uy = factors.u.leftCols(m).transpose() * y;
    return factors.u.leftCols(m) * s.cwiseProduct(uy);
  }

  Matrix matrix(double lambda) const {
    const Vector s = shrinkage(lambda);
    const Index m = s.size();
    return factors.u.leftCols(m) * s.asDiagonal() *
           factors.u.leftCols(m).transpose();
  }

  double trace(double lambda) const { return shrinkage(lambda).sum(); }
};

inline RidgeOperator ridge_operator(const Matrix& x) {
  return RidgeOperator{svd_full(x)};
}

struct LooResult {
  double lambda = 0.0;
  double loo_sum = 0.0;
  Vector per_point;
};

struct CvGrid {
  Vector lambdas;
  Vector scores;
  Index selected = 0;
};

/// Exact leave-one-out residuals for ridge: each training residual inflated
/// by 1/(1 - R^lambda_ii). The operator overload shares one SVD across a
/// whole lambda grid.
inline LooResult loo_ridge(const RidgeOperator& op, const Vector& y,
                           double lambda) {
  detail::require_positive_lambda(lambda, "loo_ridge");
  const Index n = op.factors.rows();
  if (n < 2) throw InvalidInputError("loo_ridge: needs n >= 2");
  if (y.size() != n) throw InvalidInputError("loo_ridge: y length mismatch");
  const Vector lev = op.leverages(lambda);
  const Vector resid = y - op.apply(lambda, y);
  Vector per_point(n);
  for (Index i = 0; i < n; ++i) {
    const double margin = 1.0 - lev(i);
    if (margin <= 1e-12)
      throw LeverageError("loo_ridge: leverage within 1e-12 of 1 at row " +
                          std::to_string(i));
    per_point(i) = resid(i) / margin;
  }
  return LooResult{lambda, per_point.squaredNorm(), std::move(per_point)};
}

inline LooResult loo_ridge(const Dataset& data, double lambda) {
  return loo_ridge(ridge_operator(data.x), data.y, lambda);
}

/// Exact LOO for the minimum-norm interpolator (p > n, K = X X^T invertible):
/// residual_i = (K^{-1} y)_i / (K^{-1})_ii.
inline LooResult loo_min_norm(const Dataset& data) {
  if (data.p() <= data.n())
    throw InvalidInputError("loo_min_norm: requires p > n");
  const Matrix k = data.x * data.x.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(k);
  const Vector& ev = eig.eigenvalues();
  const double emax = ev(ev.size() - 1);
  if (!(emax > 0.0) || ev(0) <= kSingularValueCutoff * emax)
    throw RankDeficiencyError(
        "loo_min_norm: gram matrix is singular; use loo_min_norm_centered or "
        "explicit refits");
  const Matrix kinv =
      eig.eigenvectors() * ev.cwiseInverse().asDiagonal() *
      eig.eigenvectors().transpose();
  const Vector num = kinv * data.y;
  Vector per_point(data.n());
  for (Index i = 0; i < data.n(); ++i) per_point(i) = num(i) / kinv(i, i);
  return LooResult{0.0, per_point.squaredNorm(), std::move(per_point)};
}

/// LOO for minimum-norm fitting with an unpenalized intercept: the plain gram
/// matrix is replaced by the doubly-centered one (rank at most n-1) and its
/// pseudo-inverse, with the squared-residual convention of the plain formula.
inline LooResult loo_min_norm_centered(const Dataset& data) {
  if (data.p() <= data.n())
    throw InvalidInputError("loo_min_norm_centered: requires p > n");
  const Index n = data.n();
  const Matrix k = data.x * data.x.transpose();
  const Matrix centerer =
      Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
  const Matrix kt = centerer * k * centerer;
  const PseudoInverse kp = pseudo_inverse(0.5 * (kt + kt.transpose()));
  const Vector num = kp.matrix * data.y;
  const double diag_floor = 1e-15 * kp.matrix.diagonal().maxCoeff();
  Vector per_point(n);
  for (Index i = 0; i < n; ++i) {
    if (kp.matrix(i, i) <= diag_floor)
      throw DegenerateInputError(
          "loo_min_norm_centered: zero pseudo-inverse diagonal at row " +
          std::to_string(i));
    per_point(i) = num(i) / kp.matrix(i, i);
  }
  return LooResult{0.0, per_point.squaredNorm(), std::move(per_point)};
}

/// Seeded k-fold CV over a lambda grid. Fold assignment is a seeded uniform
/// shuffle cut into contiguous blocks; the score is the mean held-out squared
/// error. Ties in the score break toward the larger lambda.
inline CvGrid kfold_cv(const Dataset& data, const Vector& lambdas, Index k,
                       std::uint64_t seed) {
  const Index n = data.n();
  if (k < 2 || k > n)
    throw InvalidInputError("kfold_cv: k must satisfy 2 <= k <= n");
  if (lambdas.size() == 0) throw InvalidInputError("kfold_cv: empty grid");
  for (Index l = 0; l < lambdas.size(); ++l)
    detail::require_positive_lambda(lambdas(l), "kfold_cv");

  const std::vector<std::size_t> perm =
      counter_permutation(seed, static_cast<std::size_t>(n));
  Vector total = Vector::Zero(lambdas.size());
  Index start = 0;
  for (Index fold = 0; fold < k; ++fold) {
    const Index size = n / k + (fold < n % k ? 1 : 0);
    std::vector<Index> hold(perm.begin() + start, perm.begin() + start + size);
    start += size;
    std::vector<bool> held(n, false);
    for (Index i : hold) held[i] = true;

    Matrix xtr(n - size, data.p());
    Vector ytr(n - size);
    Index r = 0;
    for (Index i = 0; i < n; ++i) {
      if (held[i]) continue;
      xtr.row(r) = data.x.row(i);
      ytr(r) = data.y(i);
      ++r;
    }
    // One SVD per fold serves the whole grid.
    const SvdFactors f = svd_full(xtr);
    const Index rank = f.rank();
    const Vector uy = f.u.leftCols(rank).transpose() * ytr;
    for (Index l = 0; l < lambdas.size(); ++l) {
      Vector scaled(rank);
      for (Index j = 0; j < rank; ++j)
        scaled(j) = f.d(j) / (f.d(j) * f.d(j) + lambdas(l)) * uy(j);
      const Vector beta = f.v.leftCols(rank) * scaled;
      for (Index i : hold) {
        const double e = data.y(i) - data.x.row(i).dot(beta);
        total(l) += e * e;
      }
    }
  }

  CvGrid grid{lambdas, total / static_cast<double>(n), 0};
  for (Index l = 1; l < lambdas.size(); ++l) {
    const bool better = grid.scores(l) < grid.scores(grid.selected);
    const bool tie_larger = grid.scores(l) == grid.scores(grid.selected) &&
                            lambdas(l) > lambdas(grid.selected);
    if (better || tie_larger) grid.selected = l;
  }
  return grid;
}

}  // namespace ridgekit
