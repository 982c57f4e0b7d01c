#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bmcc/errors.hpp"
#include "bmcc/rng.hpp"

namespace bmcc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Series = std::vector<Vector>;

inline constexpr double kSymmetryTolerance = 1e-10;

/**
 * Symmetric positive definite matrix with its Cholesky factor cached.
 *
 * Construction symmetrizes the input as (m + m')/2 after checking that the
 * asymmetry is below kSymmetryTolerance, then factorizes. Every covariance in
 * the pipeline (process, target, running estimate, forecast) is one of these,
 * so determinants and quadratic forms always reuse the factor.
 */
class SpdMatrix {
 public:
  explicit SpdMatrix(const Matrix& m) {
    if (m.rows() == 0 || m.rows() != m.cols()) {
      throw DimensionMismatch("SPD matrix must be square and non-empty, got " +
                              std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()));
    }
    if (!m.allFinite()) throw NotPositiveDefinite("matrix has non-finite entries");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance) {
      throw NotPositiveDefinite("matrix is not symmetric");
    }
    value_ = 0.5 * (m + m.transpose());
    Eigen::LLT<Matrix> llt(value_);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("Cholesky factorization hit a non-positive pivot");
    }
    lower_ = llt.matrixL();
  }

  static SpdMatrix identity(Eigen::Index p) { return SpdMatrix(Matrix::Identity(p, p)); }

  static SpdMatrix diagonal(const Vector& d) { return SpdMatrix(Matrix(d.asDiagonal())); }

  Eigen::Index dim() const { return value_.rows(); }
  const Matrix& value() const { return value_; }
  const Matrix& lower() const { return lower_; }

  // x' M^{-1} x through two triangular solves.
  double quad_form(const Vector& x) const {
    if (x.size() != dim()) {
      throw DimensionMismatch("vector of length " + std::to_string(x.size()) +
                              " against matrix of dim " + std::to_string(dim()));
    }
    const Vector w = lower_.triangularView<Eigen::Lower>().solve(x);
    return w.squaredNorm();
  }

  double log_det() const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < dim(); ++i) s += std::log(lower_(i, i));
    return 2.0 * s;
  }

  Matrix solve(const Matrix& b) const {
    const Matrix w = lower_.triangularView<Eigen::Lower>().solve(b);
    return lower_.transpose().triangularView<Eigen::Upper>().solve(w);
  }

  // k * M, reusing the factor (sqrt(k) L).
  SpdMatrix scaled(double k) const {
    if (!(k > 0.0) || !std::isfinite(k)) throw NotPositiveDefinite("non-positive scale factor");
    SpdMatrix out = *this;
    out.value_ *= k;
    out.lower_ *= std::sqrt(k);
    return out;
  }

 private:
  Matrix value_;
  Matrix lower_;
};

inline Matrix cholesky(const SpdMatrix& m) { return m.lower(); }

inline double log_det(const SpdMatrix& m) { return m.log_det(); }

inline double quad_form(const Vector& x, const SpdMatrix& m) { return m.quad_form(x); }

// Inverse of the symmetric square root, from the spectral decomposition.
inline Matrix sym_inv_sqrt(const SpdMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m.value());
  if (eig.info() != Eigen::Success) {
    throw NotPositiveDefinite("eigen decomposition failed");
  }
  const Vector& lambda = eig.eigenvalues();
  if (lambda.minCoeff() <= 0.0) {
    throw NotPositiveDefinite("non-positive eigenvalue in spectral decomposition");
  }
  const Matrix& q = eig.eigenvectors();
  Matrix r = q * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
  return 0.5 * (r + r.transpose());
}

inline Series sample_mvn(const Vector& mean, const SpdMatrix& cov, std::size_t n,
                         RngStream& rng) {
  if (mean.size() != cov.dim()) {
    throw DimensionMismatch("mean and covariance dimensions differ");
  }
  if (n == 0) throw EmptyInput("sample_mvn needs n >= 1");
  const Matrix& l = cov.lower();
  Series out;
  out.reserve(n);
  Vector z(mean.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng.normal();
    out.emplace_back(mean + l * z);
  }
  return out;
}

inline Vector sample_mean(const Series& xs) {
  if (xs.empty()) throw EmptyInput("sample mean of empty series");
  Vector m = Vector::Zero(xs.front().size());
  for (const auto& x : xs) m += x;
  return m / static_cast<double>(xs.size());
}

// Sample covariance with divisor n - 1.
inline Matrix sample_covariance(const Series& xs) {
  if (xs.size() < 2) throw TooShort("sample covariance needs at least 2 rows");
  const Vector m = sample_mean(xs);
  Matrix c = Matrix::Zero(m.size(), m.size());
  for (const auto& x : xs) {
    const Vector d = x - m;
    c.noalias() += d * d.transpose();
  }
  return c / static_cast<double>(xs.size() - 1);
}

}  // namespace bmcc
