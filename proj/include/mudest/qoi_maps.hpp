#pragma once

#include "mudest/linalg.hpp"

#include <vector>

namespace mudest {

/// Repeated observations collected by one measurement device, all sharing
/// one noise level sigma > 0.
struct DeviceData {
  std::vector<double> values;
  double sigma = 1.0;
};

/// Observation record for a set of devices. Flattened views enumerate points
/// device-major in repeat order; that enumeration is the contract every
/// residual-based map in this header relies on.
class MeasurementData {
 public:
  explicit MeasurementData(std::vector<DeviceData> devices);

  int device_count() const { return static_cast<int>(devices_.size()); }
  Eigen::Index total_points() const { return total_points_; }
  const DeviceData& device(int j) const { return devices_.at(static_cast<std::size_t>(j)); }

  Vector flattened_values() const;
  Vector flattened_sigmas() const;

 private:
  std::vector<DeviceData> devices_;
  Eigen::Index total_points_ = 0;
};

/// Linear measurement functionals, one per row. Construction records the
/// numerical rank; a deficient set is usable (some maps only warn) but
/// full_rank() lets callers enforce independence where it matters.
class LinearMeasurementSet {
 public:
  explicit LinearMeasurementSet(Matrix rows);

  Eigen::Index count() const { return rows_.rows(); }
  Eigen::Index param_dim() const { return rows_.cols(); }
  int rank() const { return rank_; }
  bool full_rank() const { return rank_ == rows_.rows(); }
  const Matrix& rows() const { return rows_; }

 private:
  Matrix rows_;
  int rank_ = 0;
};

/// Mean-error map: component j is the average signed misfit of the model
/// output against device j's data.
Vector q_me(const MeasurementData& data, const Vector& model_outputs);

/// Weighted-mean-error map: component j is
///   (1 / sqrt(N_j)) sum_i (model_j - d_{j,i}) / sigma_j,
/// so each component is N(0, 1)-distributed under the device's noise model
/// regardless of N_j.
Vector q_wme(const MeasurementData& data, const Vector& model_outputs);

/// For linear device responses the weighted-mean-error map is itself affine:
///   row j = (sqrt(N_j) / sigma_j) M_j,
///   bias_j = -(1 / sqrt(N_j)) sum_i d_{j,i} / sigma_j.
/// A rank-deficient measurement set is accepted (the rank is recorded on the
/// returned map); mismatched device counts are an error.
AffineMap assemble_wme_affine(const LinearMeasurementSet& measurements,
                              const MeasurementData& data);

/// Push-forward variance of one weighted-mean-error component:
///   (N / sigma^2) m S_init m^T. Grows linearly in the repeat count.
double wme_predicted_variance(const Eigen::RowVectorXd& measurement, const Matrix& sigma_init,
                              long n_repeats, double sigma);

/// Smallest per-device repeat counts, grown on a shared scale factor
/// (doubling then bisection), for which the assembled map's push-forward
/// covariance dominates the unit observed covariance:
///   min eig(A S_init A^T) > target.
/// Counts follow N_j proportional to sigma_j^2, so noisier devices need
/// quadratically more data. Requires an independent measurement set.
std::vector<long> min_data_for_predictability(const LinearMeasurementSet& measurements,
                                              const Matrix& sigma_init,
                                              const std::vector<double>& sigmas,
                                              double target = 1.0);

struct PointId {
  int device = 0;
  int repeat = 0;
};

/// Z-scored residuals of an output ensemble against observed data: entry
/// (k, i) is (output_k(point i) - d_i) / sigma_i with points enumerated
/// device-major. ordering maps columns back to (device, repeat).
struct ResidualMatrix {
  Matrix x;
  std::vector<PointId> ordering;
};

/// outputs is samples x total_points, columns in the data's flattened order.
ResidualMatrix build_residual_matrix(const Matrix& outputs, const MeasurementData& data);

/// Single-sample version of the z-scoring above.
Vector zscored_residual_row(const Vector& outputs, const MeasurementData& data);

/// Principal directions of a residual ensemble. components() columns are
/// orthonormal in point space; n_components() is the smallest count whose
/// cumulative explained-variance ratio reaches the fit threshold (capped by
/// the caller's maximum). Projection happens against raw residual rows; the
/// centering used during the fit is recorded but not re-applied.
class PcaMap {
 public:
  PcaMap() = default;

  const Matrix& components() const { return components_; }
  const Vector& explained_variance() const { return explained_variance_; }
  const Vector& explained_variance_ratio() const { return explained_variance_ratio_; }
  int n_components() const { return n_components_; }
  bool centered() const { return centered_; }
  const Vector& column_means() const { return column_means_; }

 private:
  friend PcaMap fit_pca(const ResidualMatrix&, double, int);

  Matrix components_;
  Vector explained_variance_;
  Vector explained_variance_ratio_;
  Vector column_means_;
  int n_components_ = 0;
  bool centered_ = true;
};

/// SVD-based fit on the column-centered residual matrix. Components carry a
/// deterministic sign (largest-magnitude entry positive). Throws when more
/// components are requested than samples or points can support.
PcaMap fit_pca(const ResidualMatrix& residuals, double variance_threshold = 0.95,
               int max_components = 0 /* 0: no cap */);

/// Projection of one raw residual row onto the retained components.
Vector q_pca(const PcaMap& map, const Vector& residual_row);

/// Row-wise batch projection: rows x n_components().
Matrix q_pca_batch(const PcaMap& map, const Matrix& residual_rows);

}  // namespace mudest
