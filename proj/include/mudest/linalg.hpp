#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mudest {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Scale of the default numerical-rank tolerance: singular values below
/// rank_tol_scale * max(rows, cols) * sigma_max count as zero.
inline constexpr double kRankTolScale = 1e-12;

/// Maximum relative asymmetry ||M - M^T|| / ||M|| accepted by symmetric
/// operations before they refuse the input.
inline constexpr double kSymmetryTol = 1e-8;

/// ||M - M^T||_F / ||M||_F, with 0/0 treated as 0.
double relative_asymmetry(const Matrix& m);

/// (M + M^T) / 2.
Matrix symmetrized(const Matrix& m);

/// Default relative rank tolerance for an r x c matrix (multiplied by the
/// largest singular value at the point of use).
double default_rank_tol(Eigen::Index rows, Eigen::Index cols);

struct SvdResult {
  Matrix u;                 // thin left singular vectors, rows x k
  Vector singular_values;   // descending, k = min(rows, cols)
  Matrix v;                 // thin right singular vectors, cols x k
};

/// Thin singular value decomposition M = U diag(s) V^T.
SvdResult svd(const Matrix& m);

/// Numerical rank: number of singular values above rank_tol * sigma_max.
int numerical_rank(const Matrix& m, double rank_tol);
int numerical_rank(const Matrix& m);

/// Moore-Penrose pseudo-inverse via SVD. Singular values at or below
/// rank_tol * sigma_max are dropped. Throws std::invalid_argument on an
/// empty matrix or a non-positive tolerance.
Matrix pseudo_inverse(const Matrix& m, double rank_tol);
Matrix pseudo_inverse(const Matrix& m);

/// Factorization of a symmetric positive semi-definite matrix.
///
/// Full-rank inputs take a Cholesky path; rank-deficient ones fall back to a
/// symmetric eigendecomposition whose solve() applies the pseudo-inverse,
/// truncating eigenvalues at the rank tolerance. Inputs with relative
/// asymmetry beyond kSymmetryTol are rejected; anything below is
/// symmetrized before factoring.
class SpdFactorization {
 public:
  /// rank_tol < 0 selects the default tolerance for the matrix size.
  explicit SpdFactorization(Matrix m, double rank_tol = -1.0);

  Eigen::Index size() const { return source_.rows(); }
  int rank() const { return rank_; }
  bool full_rank() const { return rank_ == source_.rows(); }
  bool used_cholesky() const { return cholesky_; }
  /// Absolute eigenvalue threshold below which directions were truncated.
  double tolerance() const { return threshold_; }

  /// The symmetrized matrix that was factored.
  const Matrix& matrix() const { return source_; }

  /// Lower-triangular L with L L^T = matrix(). Cholesky path only.
  Matrix cholesky_factor() const;

  /// Solves matrix() * x = rhs; on the rank-deficient path this is the
  /// minimum-norm least-squares solution.
  Vector solve(const Vector& rhs) const;
  Matrix solve(const Matrix& rhs) const;

  /// Inverse on the full-rank path, pseudo-inverse otherwise.
  Matrix inverse() const;

  /// log det of matrix(). Throws unless full rank.
  double log_det() const;

  /// Smallest and largest eigenvalues of the symmetrized input.
  double min_eigenvalue() const { return eigenvalues_.minCoeff(); }
  double max_eigenvalue() const { return eigenvalues_.maxCoeff(); }

 private:
  Matrix source_;
  Vector eigenvalues_;   // ascending
  Matrix eigenvectors_;
  Eigen::LLT<Matrix> llt_;
  double threshold_ = 0.0;
  int rank_ = 0;
  bool cholesky_ = false;
};

/// One-shot SPD/PSD solve; see SpdFactorization for the fallback policy.
Vector spd_solve(const Matrix& m, const Vector& rhs);
Matrix spd_solve(const Matrix& m, const Matrix& rhs);

/// Mean vector plus positive semi-definite covariance. The constructor
/// enforces shape agreement, symmetry to 1e-12 relative tolerance, and
/// eigenvalues >= -1e-12 * max eigenvalue, then stores the symmetrized
/// covariance.
class GaussianDensity {
 public:
  GaussianDensity(Vector mean, Matrix covariance);

  Eigen::Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }

 private:
  Vector mean_;
  Matrix covariance_;
};

/// x -> A x + b with the numerical rank of A computed once on construction.
class AffineMap {
 public:
  AffineMap(Matrix matrix, Vector bias);

  Eigen::Index input_dim() const { return matrix_.cols(); }
  Eigen::Index output_dim() const { return matrix_.rows(); }
  int rank() const { return rank_; }
  bool full_row_rank() const { return rank_ == matrix_.rows(); }

  const Matrix& matrix() const { return matrix_; }
  const Vector& bias() const { return bias_; }

  Vector apply(const Vector& x) const;
  /// Applies the map to each row of xs (samples x input_dim).
  Matrix apply_rows(const Matrix& xs) const;

 private:
  Matrix matrix_;
  Vector bias_;
  int rank_ = 0;
};

}  // namespace mudest
