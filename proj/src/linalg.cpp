#include "mudest/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace mudest {

namespace {

void require_nonempty(const Matrix& m, const char* who) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw std::invalid_argument(std::string(who) + ": empty matrix");
  }
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(who) + ": non-finite entries");
  }
}

}  // namespace

double relative_asymmetry(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("relative_asymmetry: matrix not square");
  }
  const double scale = m.norm();
  if (scale == 0.0) return 0.0;
  return (m - m.transpose()).norm() / scale;
}

Matrix symmetrized(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("symmetrized: matrix not square");
  }
  return 0.5 * (m + m.transpose());
}

double default_rank_tol(Eigen::Index rows, Eigen::Index cols) {
  return kRankTolScale * static_cast<double>(std::max(rows, cols));
}

SvdResult svd(const Matrix& m) {
  require_nonempty(m, "svd");
  Eigen::BDCSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return SvdResult{dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

int numerical_rank(const Matrix& m, double rank_tol) {
  if (rank_tol <= 0.0) {
    throw std::invalid_argument("numerical_rank: tolerance must be positive");
  }
  const SvdResult dec = svd(m);
  const double smax = dec.singular_values.size() > 0 ? dec.singular_values(0) : 0.0;
  const double cut = rank_tol * smax;
  int r = 0;
  for (Eigen::Index i = 0; i < dec.singular_values.size(); ++i) {
    if (dec.singular_values(i) > cut) ++r;
  }
  return r;
}

int numerical_rank(const Matrix& m) {
  return numerical_rank(m, default_rank_tol(m.rows(), m.cols()));
}

Matrix pseudo_inverse(const Matrix& m, double rank_tol) {
  require_nonempty(m, "pseudo_inverse");
  if (rank_tol <= 0.0) {
    throw std::invalid_argument("pseudo_inverse: tolerance must be positive");
  }
  const SvdResult dec = svd(m);
  const double smax = dec.singular_values(0);
  const double cut = rank_tol * smax;
  Vector inv = Vector::Zero(dec.singular_values.size());
  for (Eigen::Index i = 0; i < inv.size(); ++i) {
    if (dec.singular_values(i) > cut) inv(i) = 1.0 / dec.singular_values(i);
  }
  return dec.v * inv.asDiagonal() * dec.u.transpose();
}

Matrix pseudo_inverse(const Matrix& m) {
  return pseudo_inverse(m, default_rank_tol(m.rows(), m.cols()));
}

SpdFactorization::SpdFactorization(Matrix m, double rank_tol) {
  require_nonempty(m, "SpdFactorization");
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("SpdFactorization: matrix not square");
  }
  const double asym = relative_asymmetry(m);
  if (asym > kSymmetryTol) {
    throw std::invalid_argument(
        "SpdFactorization: relative asymmetry " + std::to_string(asym) +
        " exceeds " + std::to_string(kSymmetryTol));
  }
  source_ = symmetrized(m);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(source_);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("SpdFactorization: eigendecomposition failed");
  }
  eigenvalues_ = eig.eigenvalues();
  eigenvectors_ = eig.eigenvectors();

  const double emax = eigenvalues_.cwiseAbs().maxCoeff();
  const double tol = rank_tol < 0.0 ? default_rank_tol(source_.rows(), source_.cols()) : rank_tol;
  threshold_ = tol * emax;
  rank_ = 0;
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
    if (eigenvalues_(i) > threshold_) ++rank_;
  }

  if (rank_ == source_.rows()) {
    llt_.compute(source_);
    cholesky_ = llt_.info() == Eigen::Success;
  }
}

Matrix SpdFactorization::cholesky_factor() const {
  if (!cholesky_) {
    throw std::logic_error("SpdFactorization: no Cholesky factor on the rank-deficient path");
  }
  return llt_.matrixL();
}

Matrix SpdFactorization::solve(const Matrix& rhs) const {
  if (rhs.rows() != source_.rows()) {
    throw std::invalid_argument("SpdFactorization::solve: rhs row mismatch");
  }
  if (cholesky_) return llt_.solve(rhs);
  Vector inv = Vector::Zero(eigenvalues_.size());
  for (Eigen::Index i = 0; i < inv.size(); ++i) {
    if (eigenvalues_(i) > threshold_) inv(i) = 1.0 / eigenvalues_(i);
  }
  return eigenvectors_ * (inv.asDiagonal() * (eigenvectors_.transpose() * rhs));
}

Vector SpdFactorization::solve(const Vector& rhs) const {
  return solve(Matrix(rhs)).col(0);
}

Matrix SpdFactorization::inverse() const {
  return solve(Matrix(Matrix::Identity(source_.rows(), source_.cols())));
}

double SpdFactorization::log_det() const {
  if (!full_rank()) {
    throw std::logic_error("SpdFactorization::log_det: matrix is numerically singular");
  }
  if (cholesky_) {
    const Matrix l = llt_.matrixL();
    return 2.0 * l.diagonal().array().log().sum();
  }
  return eigenvalues_.array().log().sum();
}

Vector spd_solve(const Matrix& m, const Vector& rhs) {
  return SpdFactorization(m).solve(rhs);
}

Matrix spd_solve(const Matrix& m, const Matrix& rhs) {
  return SpdFactorization(m).solve(rhs);
}

GaussianDensity::GaussianDensity(Vector mean, Matrix covariance)
    : mean_(std::move(mean)) {
  if (mean_.size() == 0) {
    throw std::invalid_argument("GaussianDensity: empty mean");
  }
  if (covariance.rows() != covariance.cols() || covariance.rows() != mean_.size()) {
    throw std::invalid_argument("GaussianDensity: covariance shape does not match mean");
  }
  if (!mean_.allFinite() || !covariance.allFinite()) {
    throw std::invalid_argument("GaussianDensity: non-finite entries");
  }
  if (relative_asymmetry(covariance) > 1e-12) {
    throw std::invalid_argument("GaussianDensity: covariance asymmetry exceeds 1e-12");
  }
  covariance_ = symmetrized(covariance);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance_, Eigen::EigenvaluesOnly);
  const double emax = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(emax, 1.0)) {
    throw std::invalid_argument("GaussianDensity: covariance has a negative eigenvalue");
  }
}

AffineMap::AffineMap(Matrix matrix, Vector bias)
    : matrix_(std::move(matrix)), bias_(std::move(bias)) {
  if (matrix_.rows() == 0 || matrix_.cols() == 0) {
    throw std::invalid_argument("AffineMap: empty matrix");
  }
  if (bias_.size() != matrix_.rows()) {
    throw std::invalid_argument("AffineMap: bias length does not match rows");
  }
  if (!matrix_.allFinite() || !bias_.allFinite()) {
    throw std::invalid_argument("AffineMap: non-finite entries");
  }
  rank_ = numerical_rank(matrix_);
}

Vector AffineMap::apply(const Vector& x) const {
  if (x.size() != matrix_.cols()) {
    throw std::invalid_argument("AffineMap::apply: input dimension mismatch");
  }
  return matrix_ * x + bias_;
}

Matrix AffineMap::apply_rows(const Matrix& xs) const {
  if (xs.cols() != matrix_.cols()) {
    throw std::invalid_argument("AffineMap::apply_rows: input dimension mismatch");
  }
  return (xs * matrix_.transpose()).rowwise() + bias_.transpose();
}

}  // namespace mudest
