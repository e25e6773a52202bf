#pragma once

#include <cmath>
#include <cstdint>

#include "ridgekit/dataset.hpp"
#include "ridgekit/decomp.hpp"
#include "ridgekit/error.hpp"
#include "ridgekit/ridge.hpp"
#include "ridgekit/rng.hpp"

namespace ridgekit {

/// A dataset extended with synthetic rows so that (weighted) ordinary least
/// squares on it realizes a ridge fit. For the exact and stochastic
/// constructions the first n_original rows are the source data and the
/// appended responses are zero; the perturbation construction replaces every
/// row with noisy copies and sets n_original = 0.
struct AugmentedDataset {
  Matrix x;
  Vector y;
  Vector weights;
  Index n_original = 0;
};

/// Appends sqrt(lambda) I_p with zero responses: OLS on the result is exactly
/// the ridge solution. Expects centered data unless explicitly overridden.
inline AugmentedDataset augment_exact(const Dataset& data, double lambda,
                                      bool allow_uncentered = false) {
  detail::require_positive_lambda(lambda, "augment_exact");
  if (!data.column_means && !allow_uncentered)
    throw InvalidInputError(
        "augment_exact: data is not centered; pass allow_uncentered to "
        "augment anyway");
  const Index n = data.n();
  const Index p = data.p();
  AugmentedDataset out;
  out.x.resize(n + p, p);
  out.x.topRows(n) = data.x;
  out.x.bottomRows(p) = std::sqrt(lambda) * Matrix::Identity(p, p);
  out.y.resize(n + p);
  out.y.head(n) = data.y;
  out.y.tail(p).setZero();
  out.weights = Vector::Ones(n + p);
  out.n_original = n;
  return out;
}

/// Appends n_a rows drawn N(0, lambda I) with zero response and weight 1/n_a;
/// weighted least squares approaches ridge as n_a grows since the weighted
/// gram of the fake rows approximates lambda I.
inline AugmentedDataset augment_stochastic(const Dataset& data, double lambda,
                                           Index n_a, std::uint64_t seed) {
  if (lambda < 0.0) throw InvalidInputError("augment_stochastic: lambda < 0");
  if (n_a < 1) throw InvalidInputError("augment_stochastic: n_a < 1");
  const Index n = data.n();
  const Index p = data.p();
  const double sd = std::sqrt(lambda);
  AugmentedDataset out;
  out.x.resize(n + n_a, p);
  out.x.topRows(n) = data.x;
  for (Index i = 0; i < n_a; ++i)
    for (Index j = 0; j < p; ++j)
      out.x(n + i, j) = sd * counter_normal(seed, 0, i, j);
  out.y = Vector::Zero(n + n_a);
  out.y.head(n) = data.y;
  out.weights = Vector::Ones(n + n_a);
  out.weights.tail(n_a).setConstant(1.0 / static_cast<double>(n_a));
  out.n_original = n;
  return out;
}

/// m noisy copies of every observation, each keeping its original response.
/// With perturbations N(0, (lambda/n) I) the gram of the copies approximates
/// m (X^T X + lambda I), so OLS on the copies approaches ridge as m grows.
inline AugmentedDataset augment_perturb(const Dataset& data, double lambda,
                                        Index m, std::uint64_t seed) {
  if (lambda < 0.0) throw InvalidInputError("augment_perturb: lambda < 0");
  if (m < 1) throw InvalidInputError("augment_perturb: m < 1");
  const Index n = data.n();
  const Index p = data.p();
  const double sd = std::sqrt(lambda / static_cast<double>(n));
  AugmentedDataset out;
  out.x.resize(n * m, p);
  out.y.resize(n * m);
  for (Index copy = 0; copy < m; ++copy)
    for (Index i = 0; i < n; ++i) {
      const Index row = copy * n + i;
      for (Index j = 0; j < p; ++j)
        out.x(row, j) = data.x(i, j) + sd * counter_normal(seed, 0, row, j);
      out.y(row) = data.y(i);
    }
  out.weights = Vector::Ones(n * m);
  out.n_original = 0;
  return out;
}

/// Weighted least squares by sqrt-weight row scaling and a QR solve.
inline Vector wls_solve(const AugmentedDataset& aug) {
  for (Index i = 0; i < aug.weights.size(); ++i)
    if (!(aug.weights(i) > 0.0))
      throw InvalidInputError("wls_solve: weights must be positive");
  const Vector s = aug.weights.cwiseSqrt();
  const Matrix xs = s.asDiagonal() * aug.x;
  const Vector ys = s.cwiseProduct(aug.y);
  return Eigen::ColPivHouseholderQR<Matrix>(xs).solve(ys);
}

/// Dropout configuration: keep probability 1-phi with survivors inflated by
/// 1/(1-phi), plus the squared column norms that form the generalized ridge
/// penalty diag{||x_j||^2}.
struct DropoutSpec {
  double phi = 0.0;
  Vector column_norms_sq;

  static DropoutSpec from_data(const Dataset& data, double phi) {
    return DropoutSpec{phi, data.x.colwise().squaredNorm().transpose()};
  }
};

namespace detail {

inline void validate_dropout(const DropoutSpec& spec) {
  if (!(spec.phi >= 0.0) || spec.phi >= 1.0)
    throw DomainError("dropout: phi must lie in [0, 1)");
  for (Index j = 0; j < spec.column_norms_sq.size(); ++j)
    if (spec.column_norms_sq(j) < 0.0)
      throw DomainError("dropout: column norms must be nonnegative");
}

}  // namespace detail

/// Expected-score minimizer of the dropout least-squares criterion:
/// beta = (X^T X + phi/(1-phi) D)^{-1} X^T y, a generalized ridge regression.
inline RidgeFit dropout_closed_form(const Dataset& data,
                                    const DropoutSpec& spec) {
  detail::validate_dropout(spec);
  if (spec.column_norms_sq.size() != data.p())
    throw InvalidInputError("dropout_closed_form: column norm length mismatch");
  const double mult = spec.phi / (1.0 - spec.phi);
  Matrix system = data.x.transpose() * data.x;
  system += (mult * spec.column_norms_sq).asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(system);
  const Vector& ev = eig.eigenvalues();
  const double emax = ev(ev.size() - 1);
  if (!(emax > 0.0) || ev(0) <= kSingularValueCutoff * emax)
    throw RankDeficiencyError(
        "dropout_closed_form: singular system (phi = 0 with a rank-deficient "
        "design?)");
  Vector beta = eig.eigenvectors() *
                (eig.eigenvectors().transpose() * (data.x.transpose() * data.y))
                    .cwiseQuotient(ev);
  return RidgeFit{mult, beta, recover_intercept(data, beta)};
}

/// Monte-Carlo average of the dropout score at beta over seeded mask draws;
/// converges to -X^T y + X^T X beta + phi/(1-phi) D beta.
inline Vector dropout_score_check(const Dataset& data, const DropoutSpec& spec,
                                  const Vector& beta, Index masks,
                                  std::uint64_t seed) {
  detail::validate_dropout(spec);
  if (masks < 1) throw InvalidInputError("dropout_score_check: masks < 1");
  if (beta.size() != data.p())
    throw InvalidInputError("dropout_score_check: beta length mismatch");
  const Index n = data.n();
  const Index p = data.p();
  const double survivor = 1.0 / (1.0 - spec.phi);
  Vector mean_score = Vector::Zero(p);
  Matrix masked(n, p);
  for (Index t = 0; t < masks; ++t) {
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < p; ++j) {
        const double keep =
            counter_uniform(seed, static_cast<std::uint64_t>(t), i, j) >=
                    spec.phi
                ? survivor
                : 0.0;
        masked(i, j) = keep * data.x(i, j);
      }
    const Vector resid = data.y - masked * beta;
    mean_score -= masked.transpose() * resid;
  }
  return mean_score / static_cast<double>(masks);
}

}  // namespace ridgekit
