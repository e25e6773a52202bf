#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "ridgekit/error.hpp"

namespace ridgekit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Singular values below this fraction of d1 count as zero in all spectral
/// sums and in the default pseudo-inverse cutoff.
inline constexpr double kSingularValueCutoff = 1e-12;

/// Full-form SVD x = u * diag(d) * v^T with u n-by-n, v p-by-p and d the
/// min(n, p) singular values in descending order. Signs are normalized so the
/// largest-magnitude entry of each right singular vector is nonnegative,
/// making the factorization reproducible across runs and platforms.
struct SvdFactors {
  Matrix u;
  Vector d;
  Matrix v;

  Index rows() const { return u.rows(); }
  Index cols() const { return v.rows(); }

  /// Number of singular values above the relative cutoff.
  Index rank(double tol = kSingularValueCutoff) const {
    if (d.size() == 0) return 0;
    const double floor = tol * d(0);
    Index r = 0;
    while (r < d.size() && d(r) > floor) ++r;
    return r;
  }
};

/// Column-orthogonal q and upper-triangular r with q * r reconstructing the
/// input; the diagonal of r is kept nonnegative for reproducibility.
struct QrFactors {
  Matrix q;
  Matrix r;
};

struct PseudoInverse {
  Matrix matrix;
  Index source_rank;
  double tolerance;
};

namespace detail {

inline void require_finite(const Matrix& x, const char* op) {
  if (!x.allFinite())
    throw InvalidInputError(std::string(op) + ": input has non-finite entries");
}

// Flip paired singular-vector signs so max-|entry| of each right vector is
// nonnegative; unpaired columns (null-space directions) are normalized alone.
inline void normalize_svd_signs(Matrix& u, Matrix& v, Index m) {
  for (Index j = 0; j < v.cols(); ++j) {
    Index imax = 0;
    v.col(j).cwiseAbs().maxCoeff(&imax);
    if (v(imax, j) < 0.0) {
      v.col(j) = -v.col(j);
      if (j < m && j < u.cols()) u.col(j) = -u.col(j);
    }
  }
  for (Index j = m; j < u.cols(); ++j) {
    Index imax = 0;
    u.col(j).cwiseAbs().maxCoeff(&imax);
    if (u(imax, j) < 0.0) u.col(j) = -u.col(j);
  }
}

}  // namespace detail

inline SvdFactors svd_full(const Matrix& x) {
  detail::require_finite(x, "svd_full");
  const Index m = std::min(x.rows(), x.cols());
  SvdFactors f;
  if (m <= 16) {
    Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
    f.u = svd.matrixU();
    f.d = svd.singularValues();
    f.v = svd.matrixV();
  } else {
    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
    f.u = svd.matrixU();
    f.d = svd.singularValues();
    f.v = svd.matrixV();
  }
  detail::normalize_svd_signs(f.u, f.v, m);
  return f;
}

/// Thin QR of x (n-by-p, n >= p gives q n-by-p); r diagonal forced >= 0.
inline QrFactors qr_thin(const Matrix& x) {
  detail::require_finite(x, "qr_thin");
  const Index k = std::min(x.rows(), x.cols());
  Eigen::HouseholderQR<Matrix> qr(x);
  QrFactors f;
  f.q = qr.householderQ() * Matrix::Identity(x.rows(), k);
  f.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Index j = 0; j < k; ++j) {
    if (f.r(j, j) < 0.0) {
      f.r.row(j) = -f.r.row(j);
      f.q.col(j) = -f.q.col(j);
    }
  }
  return f;
}

/// Upper Cholesky factor r with k = r^T r, positive diagonal. Returns nullopt
/// when k is not numerically positive definite.
inline std::optional<Matrix> cholesky_upper(const Matrix& k) {
  detail::require_finite(k, "cholesky_upper");
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success) return std::nullopt;
  return Matrix(llt.matrixU());
}

inline PseudoInverse pseudo_inverse(const Matrix& x,
                                    double tol = kSingularValueCutoff) {
  const SvdFactors f = svd_full(x);
  const Index r = f.rank(tol);
  PseudoInverse out{Matrix::Zero(x.cols(), x.rows()), r, tol};
  for (Index j = 0; j < r; ++j)
    out.matrix += (1.0 / f.d(j)) * f.v.col(j) * f.u.col(j).transpose();
  return out;
}

inline Matrix pinv(const Matrix& x, double tol = kSingularValueCutoff) {
  return pseudo_inverse(x, tol).matrix;
}

}  // namespace ridgekit
