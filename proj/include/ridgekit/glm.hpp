#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "ridgekit/dataset.hpp"
#include "ridgekit/error.hpp"
#include "ridgekit/kernel.hpp"

namespace ridgekit {

enum class Family { Gaussian, Binomial };

/// Canonical-link GLM with an optional unpenalized intercept coordinate.
struct GlmSpec {
  Family family = Family::Gaussian;
  bool intercept = true;
};

namespace detail {

inline void validate_response(const GlmSpec& spec, const Vector& y) {
  if (spec.family == Family::Binomial)
    for (Index i = 0; i < y.size(); ++i)
      if (y(i) != 0.0 && y(i) != 1.0)
        throw InvalidInputError(
            "binomial family: responses must be 0 or 1 (row " +
            std::to_string(i) + ")");
}

inline double log1pexp(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta))
                   : std::log1p(std::exp(eta));
}

// Negative penalized log-likelihood. The gaussian case is scaled so that its
// minimizer is exactly the ridge solution at the same lambda:
// f = 1/2 ||y - eta||^2 + lambda/2 ||beta||^2.
inline double glm_objective(Family family, const Vector& y, const Vector& eta,
                            const Vector& beta, double lambda) {
  double nll = 0.0;
  if (family == Family::Gaussian) {
    nll = 0.5 * (y - eta).squaredNorm();
  } else {
    for (Index i = 0; i < y.size(); ++i)
      nll += log1pexp(eta(i)) - y(i) * eta(i);
  }
  return nll + 0.5 * lambda * beta.squaredNorm();
}

inline Vector glm_mean(Family family, const Vector& eta) {
  if (family == Family::Gaussian) return eta;
  Vector mu(eta.size());
  for (Index i = 0; i < eta.size(); ++i)
    mu(i) = 1.0 / (1.0 + std::exp(-eta(i)));
  return mu;
}

inline Vector glm_weights(Family family, const Vector& mu) {
  if (family == Family::Gaussian) return Vector::Ones(mu.size());
  return mu.array() * (1.0 - mu.array());
}

// Damped Newton for min_beta -loglik(y, b0 + x beta) + lambda/2 ||beta||^2.
// Returns (intercept, coefficients); the intercept slot is 0 when the model
// has no intercept.
inline std::pair<double, Vector> penalized_glm_newton(const Matrix& x,
                                                      const Vector& y,
                                                      const GlmSpec& spec,
                                                      double lambda) {
  constexpr int kMaxIter = 100;
  constexpr int kMaxHalvings = 50;
  constexpr double kScoreTol = 1e-8;

  const Index n = x.rows();
  const Index p = x.cols();
  const Index dim = p + (spec.intercept ? 1 : 0);
  double b0 = 0.0;
  Vector beta = Vector::Zero(p);

  for (int it = 0; it < kMaxIter; ++it) {
    Vector eta = x * beta;
    if (spec.intercept) eta.array() += b0;
    const Vector mu = glm_mean(spec.family, eta);
    const Vector w = glm_weights(spec.family, mu);
    const Vector resid = y - mu;

    Vector grad(dim);
    Matrix hess(dim, dim);
    const Index off = spec.intercept ? 1 : 0;
    if (spec.intercept) {
      grad(0) = -resid.sum();
      hess(0, 0) = w.sum();
      const Vector wx = x.transpose() * w;
      hess.block(0, off, 1, p) = wx.transpose();
      hess.block(off, 0, p, 1) = wx;
    }
    grad.tail(p) = -(x.transpose() * resid) + lambda * beta;
    hess.block(off, off, p, p) =
        x.transpose() * w.asDiagonal() * x +
        lambda * Matrix::Identity(p, p);

    if (grad.norm() < kScoreTol) return {spec.intercept ? b0 : 0.0, beta};

    const Vector step = Eigen::LDLT<Matrix>(hess).solve(grad);
    const double f0 = glm_objective(spec.family, y, eta, beta, lambda);
    double t = 1.0;
    double nb0 = b0;
    Vector nbeta = beta;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      nb0 = spec.intercept ? b0 - t * step(0) : 0.0;
      nbeta = beta - t * step.tail(p);
      Vector neta = x * nbeta;
      if (spec.intercept) neta.array() += nb0;
      if (glm_objective(spec.family, y, neta, nbeta, lambda) <= f0) break;
      t *= 0.5;
    }
    b0 = nb0;
    beta = std::move(nbeta);
  }

  Vector eta = x * beta;
  if (spec.intercept) eta.array() += b0;
  Vector final_grad = -(x.transpose() * (y - glm_mean(spec.family, eta)));
  final_grad += lambda * beta;
  throw ConvergenceError(
      "penalized GLM Newton did not converge in 100 iterations "
      "(n=" + std::to_string(n) + ", p=" + std::to_string(p) +
      ", score norm=" + std::to_string(final_grad.norm()) + ")");
}

}  // namespace detail

/// Maximum penalized likelihood in the original coordinates: damped Newton on
/// the ridged score equations with the intercept left unpenalized.
inline RidgeFit ridge_glm_primal(const Dataset& data, const GlmSpec& spec,
                                 double lambda) {
  detail::require_positive_lambda(lambda, "ridge_glm_primal");
  detail::require_finite(data.x, "ridge_glm_primal");
  detail::validate_response(spec, data.y);
  auto [b0, beta] = detail::penalized_glm_newton(data.x, data.y, spec, lambda);
  RidgeFit fit{lambda, std::move(beta), std::nullopt};
  if (spec.intercept) fit.intercept = b0;
  return fit;
}

/// Same objective reparametrized through the Cholesky factor K = R^T R:
/// an n-dimensional ridged GLM in theta = R alpha, with alpha recovered by a
/// triangular solve and fits eta = K alpha.
inline KernelFit ridge_glm_kernel(const KernelMatrix& k, const Vector& y,
                                  const GlmSpec& spec, double lambda) {
  detail::require_positive_lambda(lambda, "ridge_glm_kernel");
  if (y.size() != k.entries.rows())
    throw InvalidInputError("ridge_glm_kernel: y length mismatch");
  detail::validate_response(spec, y);
  const auto r = detail::cholesky_upper_jittered(k.entries);
  if (!r)
    throw RankDeficiencyError(
        "ridge_glm_kernel: kernel matrix is not positive definite even after "
        "jitter");
  auto [t0, theta] =
      detail::penalized_glm_newton(r->transpose(), y, spec, lambda);
  KernelFit fit;
  fit.alpha = r->triangularView<Eigen::Upper>().solve(theta);
  fit.theta = std::move(theta);
  if (spec.intercept) fit.intercept = t0;
  fit.lambda = lambda;
  fit.kind = k.kind;
  return fit;
}

}  // namespace ridgekit
