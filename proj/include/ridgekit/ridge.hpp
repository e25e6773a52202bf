#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ridgekit/dataset.hpp"
#include "ridgekit/decomp.hpp"
#include "ridgekit/error.hpp"

namespace ridgekit {

struct RidgeFit {
  double lambda = 0.0;
  Vector coefficients;
  std::optional<double> intercept;
};

/// Ridge solutions over a descending lambda grid, all derived from one SVD of
/// the training design. Centering metadata is carried along so intercepts can
/// be recovered per grid point.
struct RidgePath {
  Vector lambdas;
  Matrix coefficients;  // one row per lambda
  SvdFactors factors;
  std::optional<Vector> column_means;
  std::optional<Vector> column_scales;
  std::optional<double> y_mean;
};

struct MinNormFit {
  Vector coefficients;
  double residual_norm = 0.0;
};

/// Fixed-design sampling model y = x beta + eps with iid N(0, sigma^2) errors.
struct LinearModelTruth {
  Vector beta;
  double sigma;
};

namespace detail {

inline void require_positive_lambda(double lambda, const char* op) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw InvalidInputError(std::string(op) + ": lambda must be positive");
}

}  // namespace detail

/// Solves (x^T x + lambda I) beta = x^T y. lambda = 0 is allowed only for
/// full-column-rank designs; rank-deficient least squares should go through
/// min_norm_fit instead.
inline RidgeFit ridge_fit(const Dataset& data, double lambda) {
  detail::require_finite(data.x, "ridge_fit");
  if (lambda < 0.0 || !std::isfinite(lambda))
    throw InvalidInputError("ridge_fit: lambda must be nonnegative");
  const Index p = data.p();
  Vector beta(p);
  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(data.x);
    if (qr.rank() < p)
      throw RankDeficiencyError(
          "ridge_fit: lambda = 0 with rank-deficient design; use min_norm_fit "
          "for the minimum-norm least-squares solution");
    beta = qr.solve(data.y);
  } else {
    Matrix gram = data.x.transpose() * data.x;
    gram.diagonal().array() += lambda;
    beta = Eigen::LDLT<Matrix>(gram).solve(data.x.transpose() * data.y);
  }
  return RidgeFit{lambda, beta, recover_intercept(data, beta)};
}

/// Spectral ridge path: beta(lambda) = sum_{d_j>0} v_j d_j/(d_j^2+lambda) <u_j,y>.
inline RidgePath ridge_path(const Dataset& data, Vector lambdas) {
  if (lambdas.size() == 0)
    throw InvalidInputError("ridge_path: empty lambda grid");
  for (Index i = 0; i < lambdas.size(); ++i)
    detail::require_positive_lambda(lambdas(i), "ridge_path");
  std::sort(lambdas.begin(), lambdas.end(), std::greater<double>());

  RidgePath path;
  path.factors = svd_full(data.x);
  path.lambdas = std::move(lambdas);
  path.column_means = data.column_means;
  path.column_scales = data.column_scales;
  path.y_mean = data.y_mean;

  const SvdFactors& f = path.factors;
  const Index r = f.rank();
  const Vector uy = f.u.leftCols(r).transpose() * data.y;
  path.coefficients.resize(path.lambdas.size(), data.p());
  for (Index l = 0; l < path.lambdas.size(); ++l) {
    const double lambda = path.lambdas(l);
    Vector scaled(r);
    for (Index j = 0; j < r; ++j)
      scaled(j) = f.d(j) / (f.d(j) * f.d(j) + lambda) * uy(j);
    path.coefficients.row(l) = (f.v.leftCols(r) * scaled).transpose();
  }
  return path;
}

/// Fitted values yhat = sum u_j d_j^2/(d_j^2+lambda) <u_j,y> for any lambda,
/// reusing the path's factorization.
inline Vector fitted_values(const RidgePath& path, double lambda,
                            const Vector& y) {
  detail::require_positive_lambda(lambda, "fitted_values");
  const SvdFactors& f = path.factors;
  if (y.size() != f.rows())
    throw InvalidInputError("fitted_values: y length mismatch");
  const Index r = f.rank();
  Vector shrunk(r);
  const Vector uy = f.u.leftCols(r).transpose() * y;
  for (Index j = 0; j < r; ++j) {
    const double dj2 = f.d(j) * f.d(j);
    shrunk(j) = dj2 / (dj2 + lambda) * uy(j);
  }
  return f.u.leftCols(r) * shrunk;
}

/// Least-squares solution of minimum l2 norm: the lambda -> 0 limit of the
/// ridge path, well defined for any design shape.
inline MinNormFit min_norm_fit(const Dataset& data) {
  const SvdFactors f = svd_full(data.x);
  const Index r = f.rank();
  Vector scaled(r);
  const Vector uy = f.u.leftCols(r).transpose() * data.y;
  for (Index j = 0; j < r; ++j) scaled(j) = uy(j) / f.d(j);
  Vector beta = f.v.leftCols(r) * scaled;
  const double residual = (data.y - data.x * beta).norm();
  return MinNormFit{std::move(beta), residual};
}

/// Gradient descent on half the residual sum of squares, started at zero.
/// Iterates stay in the row space of x, so running to convergence recovers the
/// minimum-norm solution. Ten consecutive residual-norm increases are treated
/// as divergence from an oversized step.
inline Vector gradient_descent_least_squares(const Dataset& data, double step,
                                             Index iters) {
  if (!(step > 0.0)) throw InvalidInputError("gradient descent: step <= 0");
  if (iters < 1) throw InvalidInputError("gradient descent: iters < 1");
  Vector beta = Vector::Zero(data.p());
  double prev_norm = data.y.norm();
  int growth_streak = 0;
  for (Index it = 0; it < iters; ++it) {
    const Vector residual = data.y - data.x * beta;
    beta += step * (data.x.transpose() * residual);
    const double cur_norm = (data.y - data.x * beta).norm();
    growth_streak = cur_norm > prev_norm ? growth_streak + 1 : 0;
    if (growth_streak >= 10)
      throw StepSizeError(
          "gradient descent diverging: residual grew for 10 consecutive "
          "iterations; step must satisfy step < 2/d1^2");
    prev_norm = cur_norm;
  }
  return beta;
}

/// E beta_lambda - beta under the fixed-design model: the true coefficient's
/// coordinate along each principal direction is shrunk by lambda/(d_j^2+lambda),
/// so the bias is minus the sum of those shrunk coordinates.
inline Vector bias_at(const SvdFactors& factors, const LinearModelTruth& truth,
                      double lambda) {
  if (lambda < 0.0 || !std::isfinite(lambda))
    throw DomainError("bias_at: lambda must be nonnegative");
  if (truth.beta.size() != factors.cols())
    throw InvalidInputError("bias_at: beta length mismatch");
  const Index p = factors.cols();
  const Index m = factors.d.size();
  if (lambda == 0.0) {
    if (factors.rank() < p)
      throw RankDeficiencyError(
          "bias_at: lambda = 0 requires a full-column-rank design");
    return Vector::Zero(p);  // OLS is unbiased
  }
  Vector bias = Vector::Zero(p);
  const Vector vb = factors.v.transpose() * truth.beta;
  for (Index j = 0; j < p; ++j) {
    const double dj2 = j < m ? factors.d(j) * factors.d(j) : 0.0;
    bias -= lambda / (dj2 + lambda) * vb(j) * factors.v.col(j);
  }
  return bias;
}

/// Var(beta_lambda) = sigma^2 sum d_j^2/(d_j^2+lambda)^2 v_j v_j^T.
inline Matrix covariance_at(const SvdFactors& factors,
                            const LinearModelTruth& truth, double lambda) {
  if (lambda < 0.0 || !std::isfinite(lambda))
    throw DomainError("covariance_at: lambda must be nonnegative");
  const Index p = factors.cols();
  const Index r = factors.rank();
  if (lambda == 0.0 && r < p)
    throw RankDeficiencyError(
        "covariance_at: lambda = 0 requires a full-column-rank design");
  Matrix cov = Matrix::Zero(p, p);
  const double s2 = truth.sigma * truth.sigma;
  for (Index j = 0; j < r; ++j) {
    const double dj2 = factors.d(j) * factors.d(j);
    const double w = s2 * dj2 / ((dj2 + lambda) * (dj2 + lambda));
    cov += w * factors.v.col(j) * factors.v.col(j).transpose();
  }
  return cov;
}

/// Prediction mean-squared error at x0: variance plus squared bias. Adding
/// sigma^2 gives the expected prediction error of the response.
inline double mse_at(const SvdFactors& factors, const LinearModelTruth& truth,
                     double lambda, const Vector& x0) {
  const Matrix cov = covariance_at(factors, truth, lambda);
  const Vector bias = bias_at(factors, truth, lambda);
  const double b = x0.dot(bias);
  return x0.dot(cov * x0) + b * b;
}

/// James-Stein shrinkage of the OLS vector. Implemented exactly as the
/// uniform-shrinkage formula; positive_part truncates the factor at zero.
inline Vector james_stein(const Dataset& data, double sigma2,
                          bool positive_part = false) {
  const Index p = data.p();
  if (p < 3) throw DomainError("james_stein: requires p >= 3");
  if (sigma2 < 0.0) throw DomainError("james_stein: sigma2 must be >= 0");
  const RidgeFit ols = ridge_fit(data, 0.0);
  const double denom = (data.x * ols.coefficients).squaredNorm();
  if (denom == 0.0)
    throw DegenerateInputError("james_stein: beta^T X^T X beta is zero");
  double factor = 1.0 - (static_cast<double>(p) - 2.0) * sigma2 / denom;
  if (positive_part && factor < 0.0) factor = 0.0;
  return factor * ols.coefficients;
}

/// Conventional residual-variance estimate RSS/(n - p) for use with
/// james_stein when sigma^2 is unknown.
inline double estimate_sigma2(const Dataset& data) {
  if (data.n() <= data.p())
    throw DomainError("estimate_sigma2: requires n > p");
  const RidgeFit ols = ridge_fit(data, 0.0);
  const double rss = (data.y - data.x * ols.coefficients).squaredNorm();
  return rss / static_cast<double>(data.n() - data.p());
}

/// Bayesian correspondence: ridge lambda implied by a Gaussian prior,
/// lambda = sigma_eps^2 / sigma_beta^2.
inline double lambda_from_prior(double sigma_eps2, double sigma_beta2) {
  if (!(sigma_eps2 > 0.0) || !(sigma_beta2 > 0.0))
    throw DomainError("lambda_from_prior: variances must be positive");
  return sigma_eps2 / sigma_beta2;
}

}  // namespace ridgekit
