#include "mudest/qoi_maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mudest {

MeasurementData::MeasurementData(std::vector<DeviceData> devices)
    : devices_(std::move(devices)) {
  if (devices_.empty()) {
    throw std::invalid_argument("MeasurementData: no devices");
  }
  for (std::size_t j = 0; j < devices_.size(); ++j) {
    const DeviceData& dev = devices_[j];
    if (dev.values.empty()) {
      throw std::invalid_argument("MeasurementData: device " + std::to_string(j) +
                                  " has no observations");
    }
    if (!(dev.sigma > 0.0) || !std::isfinite(dev.sigma)) {
      throw std::invalid_argument("MeasurementData: device " + std::to_string(j) +
                                  " has non-positive sigma");
    }
    for (double v : dev.values) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("MeasurementData: device " + std::to_string(j) +
                                    " has a non-finite observation");
      }
    }
    total_points_ += static_cast<Eigen::Index>(dev.values.size());
  }
}

Vector MeasurementData::flattened_values() const {
  Vector out(total_points_);
  Eigen::Index at = 0;
  for (const DeviceData& dev : devices_) {
    for (double v : dev.values) out(at++) = v;
  }
  return out;
}

Vector MeasurementData::flattened_sigmas() const {
  Vector out(total_points_);
  Eigen::Index at = 0;
  for (const DeviceData& dev : devices_) {
    for (std::size_t i = 0; i < dev.values.size(); ++i) out(at++) = dev.sigma;
  }
  return out;
}

LinearMeasurementSet::LinearMeasurementSet(Matrix rows) : rows_(std::move(rows)) {
  if (rows_.rows() == 0 || rows_.cols() == 0) {
    throw std::invalid_argument("LinearMeasurementSet: empty matrix");
  }
  if (!rows_.allFinite()) {
    throw std::invalid_argument("LinearMeasurementSet: non-finite entries");
  }
  rank_ = numerical_rank(rows_);
}

namespace {

void require_device_match(const MeasurementData& data, const Vector& model_outputs,
                          const char* who) {
  if (model_outputs.size() != data.device_count()) {
    throw std::invalid_argument(std::string(who) + ": one model output per device required");
  }
}

}  // namespace

Vector q_me(const MeasurementData& data, const Vector& model_outputs) {
  require_device_match(data, model_outputs, "q_me");
  Vector out(data.device_count());
  for (int j = 0; j < data.device_count(); ++j) {
    const DeviceData& dev = data.device(j);
    double acc = 0.0;
    for (double d : dev.values) acc += model_outputs(j) - d;
    out(j) = acc / static_cast<double>(dev.values.size());
  }
  return out;
}

Vector q_wme(const MeasurementData& data, const Vector& model_outputs) {
  require_device_match(data, model_outputs, "q_wme");
  Vector out(data.device_count());
  for (int j = 0; j < data.device_count(); ++j) {
    const DeviceData& dev = data.device(j);
    double acc = 0.0;
    for (double d : dev.values) acc += (model_outputs(j) - d) / dev.sigma;
    out(j) = acc / std::sqrt(static_cast<double>(dev.values.size()));
  }
  return out;
}

AffineMap assemble_wme_affine(const LinearMeasurementSet& measurements,
                              const MeasurementData& data) {
  if (measurements.count() != data.device_count()) {
    throw std::invalid_argument("assemble_wme_affine: measurement/device count mismatch");
  }
  const Eigen::Index m = measurements.count();
  Matrix a(m, measurements.param_dim());
  Vector b(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const DeviceData& dev = data.device(static_cast<int>(j));
    const double n = static_cast<double>(dev.values.size());
    a.row(j) = (std::sqrt(n) / dev.sigma) * measurements.rows().row(j);
    double sum = 0.0;
    for (double d : dev.values) sum += d;
    b(j) = -sum / (std::sqrt(n) * dev.sigma);
  }
  return AffineMap(std::move(a), std::move(b));
}

double wme_predicted_variance(const Eigen::RowVectorXd& measurement, const Matrix& sigma_init,
                              long n_repeats, double sigma) {
  if (measurement.size() != sigma_init.rows() || sigma_init.rows() != sigma_init.cols()) {
    throw std::invalid_argument("wme_predicted_variance: dimension mismatch");
  }
  if (n_repeats < 1) {
    throw std::invalid_argument("wme_predicted_variance: repeat count must be >= 1");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("wme_predicted_variance: sigma must be positive");
  }
  const double base = measurement * sigma_init * measurement.transpose();
  return static_cast<double>(n_repeats) / (sigma * sigma) * base;
}

namespace {

std::vector<long> counts_at_scale(const std::vector<double>& sigmas, double t) {
  std::vector<long> counts(sigmas.size());
  for (std::size_t j = 0; j < sigmas.size(); ++j) {
    counts[j] = std::max<long>(1, static_cast<long>(std::ceil(t * sigmas[j] * sigmas[j])));
  }
  return counts;
}

double assembled_min_eig(const LinearMeasurementSet& measurements, const Matrix& sigma_init,
                         const std::vector<double>& sigmas, const std::vector<long>& counts) {
  Matrix a(measurements.count(), measurements.param_dim());
  for (Eigen::Index j = 0; j < measurements.count(); ++j) {
    const std::size_t sj = static_cast<std::size_t>(j);
    a.row(j) = (std::sqrt(static_cast<double>(counts[sj])) / sigmas[sj]) *
               measurements.rows().row(j);
  }
  const Matrix pred = symmetrized(a * sigma_init * a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(pred, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

}  // namespace

std::vector<long> min_data_for_predictability(const LinearMeasurementSet& measurements,
                                              const Matrix& sigma_init,
                                              const std::vector<double>& sigmas,
                                              double target) {
  if (!measurements.full_rank()) {
    throw std::invalid_argument(
        "min_data_for_predictability: measurement set is not linearly independent");
  }
  if (static_cast<Eigen::Index>(sigmas.size()) != measurements.count()) {
    throw std::invalid_argument("min_data_for_predictability: one sigma per measurement required");
  }
  for (double s : sigmas) {
    if (!(s > 0.0)) {
      throw std::invalid_argument("min_data_for_predictability: sigmas must be positive");
    }
  }
  if (!(target > 0.0)) {
    throw std::invalid_argument("min_data_for_predictability: target must be positive");
  }

  // Counts grow along the ray N_j(t) = max(1, ceil(t sigma_j^2)); the
  // assembled min eigenvalue is monotone along it.
  const double strict_target = target * (1.0 + 1e-9);
  const auto satisfied = [&](const std::vector<long>& counts) {
    return assembled_min_eig(measurements, sigma_init, sigmas, counts) > strict_target;
  };

  double sig_max = 0.0;
  for (double s : sigmas) sig_max = std::max(sig_max, s);
  double lo = 1.0 / (sig_max * sig_max);  // all-ones floor
  if (satisfied(counts_at_scale(sigmas, lo))) {
    return counts_at_scale(sigmas, lo);
  }

  double hi = lo;
  for (int iter = 0; iter < 128; ++iter) {
    hi *= 2.0;
    if (satisfied(counts_at_scale(sigmas, hi))) break;
    if (iter == 127) {
      throw std::runtime_error("min_data_for_predictability: target unreachable");
    }
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-9 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (satisfied(counts_at_scale(sigmas, mid))) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return counts_at_scale(sigmas, hi);
}

ResidualMatrix build_residual_matrix(const Matrix& outputs, const MeasurementData& data) {
  if (outputs.cols() != data.total_points()) {
    throw std::invalid_argument("build_residual_matrix: outputs columns != total data points");
  }
  if (outputs.rows() == 0) {
    throw std::invalid_argument("build_residual_matrix: no samples");
  }
  const Vector d = data.flattened_values();
  const Vector sig = data.flattened_sigmas();
  ResidualMatrix out;
  out.x = (outputs.rowwise() - d.transpose()).array().rowwise() /
          sig.transpose().array();
  out.ordering.reserve(static_cast<std::size_t>(data.total_points()));
  for (int j = 0; j < data.device_count(); ++j) {
    for (std::size_t i = 0; i < data.device(j).values.size(); ++i) {
      out.ordering.push_back(PointId{j, static_cast<int>(i)});
    }
  }
  return out;
}

Vector zscored_residual_row(const Vector& outputs, const MeasurementData& data) {
  if (outputs.size() != data.total_points()) {
    throw std::invalid_argument("zscored_residual_row: outputs length != total data points");
  }
  return (outputs - data.flattened_values()).cwiseQuotient(data.flattened_sigmas());
}

PcaMap fit_pca(const ResidualMatrix& residuals, double variance_threshold, int max_components) {
  const Matrix& x = residuals.x;
  if (x.rows() < 2) {
    throw std::invalid_argument("fit_pca: at least two samples required");
  }
  if (!(variance_threshold > 0.0) || variance_threshold > 1.0) {
    throw std::invalid_argument("fit_pca: variance threshold must be in (0, 1]");
  }
  const Eigen::Index k = std::min(x.rows(), x.cols());
  if (max_components > k) {
    throw std::invalid_argument("fit_pca: fewer samples/points than requested components");
  }
  const int cap = max_components > 0 ? max_components : static_cast<int>(k);

  PcaMap map;
  map.column_means_ = x.colwise().mean();
  const Matrix centered = x.rowwise() - map.column_means_.transpose();
  SvdResult dec = svd(centered);

  const double total = dec.singular_values.squaredNorm();
  if (total == 0.0) {
    throw std::runtime_error("fit_pca: residual ensemble has no variance");
  }

  // Deterministic component signs: largest-magnitude entry positive.
  for (Eigen::Index c = 0; c < dec.v.cols(); ++c) {
    Eigen::Index at;
    dec.v.col(c).cwiseAbs().maxCoeff(&at);
    if (dec.v(at, c) < 0.0) dec.v.col(c) *= -1.0;
  }

  map.components_ = dec.v;
  map.explained_variance_ =
      dec.singular_values.array().square() / static_cast<double>(x.rows() - 1);
  map.explained_variance_ratio_ = dec.singular_values.array().square() / total;

  int chosen = cap;
  double cum = 0.0;
  for (Eigen::Index i = 0; i < map.explained_variance_ratio_.size(); ++i) {
    cum += map.explained_variance_ratio_(i);
    if (cum >= variance_threshold * (1.0 - 1e-10)) {
      chosen = static_cast<int>(i) + 1;
      break;
    }
  }
  map.n_components_ = std::max(1, std::min(chosen, cap));
  map.centered_ = true;
  return map;
}

Vector q_pca(const PcaMap& map, const Vector& residual_row) {
  if (residual_row.size() != map.components().rows()) {
    throw std::invalid_argument("q_pca: residual length != fitted point count");
  }
  return map.components().leftCols(map.n_components()).transpose() * residual_row;
}

Matrix q_pca_batch(const PcaMap& map, const Matrix& residual_rows) {
  if (residual_rows.cols() != map.components().rows()) {
    throw std::invalid_argument("q_pca_batch: residual width != fitted point count");
  }
  return residual_rows * map.components().leftCols(map.n_components());
}

}  // namespace mudest
