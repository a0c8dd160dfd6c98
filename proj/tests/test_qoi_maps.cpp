#include "mudest/fixtures.hpp"
#include "mudest/qoi_maps.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace mudest;

namespace {

MeasurementData two_device_data() {
  DeviceData first;
  first.values = {1.0, 2.0, 3.0, 4.0};
  first.sigma = 1.0;
  DeviceData second;
  second.values = {0.5, 1.5};
  second.sigma = 0.5;
  return MeasurementData({first, second});
}

}  // namespace

TEST_CASE("measurement data flattens device-major") {
  const MeasurementData data = two_device_data();
  CHECK(data.device_count() == 2);
  CHECK(data.total_points() == 6);

  const Vector values = data.flattened_values();
  const Vector sigmas = data.flattened_sigmas();
  REQUIRE(values.size() == 6);
  CHECK(values(0) == 1.0);
  CHECK(values(3) == 4.0);
  CHECK(values(4) == 0.5);
  CHECK(sigmas(0) == 1.0);
  CHECK(sigmas(5) == 0.5);

  CHECK_THROWS_AS(MeasurementData({}), std::invalid_argument);
  DeviceData empty_device;
  empty_device.sigma = 1.0;
  CHECK_THROWS_AS(MeasurementData({empty_device}), std::invalid_argument);
  DeviceData bad_sigma;
  bad_sigma.values = {1.0};
  bad_sigma.sigma = 0.0;
  CHECK_THROWS_AS(MeasurementData({bad_sigma}), std::invalid_argument);
}

TEST_CASE("mean-error and standardized-error components by hand") {
  const MeasurementData data = two_device_data();
  Vector model(2);
  model << 3.0, 1.5;

  const Vector me = q_me(data, model);
  // Device 1: mean(3-1, 3-2, 3-3, 3-4) = 0.5. Device 2: mean(1, 0) = 0.5.
  CHECK(me(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(me(1) == doctest::Approx(0.5).epsilon(1e-15));

  const Vector wme = q_wme(data, model);
  // Device 1: (2+1+0-1) / (1 * sqrt(4)) = 1. Device 2: (2+0) / (0.5 ... )
  // -> sum((1.5-d)/0.5) = 2, / sqrt(2).
  CHECK(wme(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(wme(1) == doctest::Approx(2.0 / std::sqrt(2.0)).epsilon(1e-14));

  CHECK_THROWS_AS(q_me(data, Vector::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(q_wme(data, Vector::Zero(1)), std::invalid_argument);
}

TEST_CASE("assembled affine map reproduces the standardized-error map") {
  Rng rng(301);
  Matrix rows(2, 3);
  rows << 1.0, -0.5, 0.25, 0.0, 2.0, 1.0;
  const LinearMeasurementSet measurements(rows);
  CHECK(measurements.full_rank());

  const MeasurementData data = two_device_data();
  const AffineMap map = assemble_wme_affine(measurements, data);

  // Row scaling: sqrt(N_j) / sigma_j.
  CHECK((map.matrix().row(0) - (2.0 / 1.0) * rows.row(0)).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((map.matrix().row(1) - (std::sqrt(2.0) / 0.5) * rows.row(1)).cwiseAbs().maxCoeff() <=
        1e-14);
  // Bias: -(sum of data) / (sqrt(N_j) sigma_j).
  CHECK(map.bias()(0) == doctest::Approx(-10.0 / 2.0).epsilon(1e-14));
  CHECK(map.bias()(1) == doctest::Approx(-2.0 / (std::sqrt(2.0) * 0.5)).epsilon(1e-14));

  // The affine map and the direct evaluation agree on random parameters.
  for (int trial = 0; trial < 10; ++trial) {
    const Vector lam = rng.normal_vector(3);
    const Vector model = rows * lam;
    CHECK((map.apply(lam) - q_wme(data, model)).cwiseAbs().maxCoeff() <= 1e-12);
  }

  CHECK_THROWS_AS(assemble_wme_affine(LinearMeasurementSet(rows.topRows(1)), data),
                  std::invalid_argument);
}

TEST_CASE("duplicating every observation scales the map by sqrt(2)") {
  Matrix rows(2, 3);
  rows << 1.0, -0.5, 0.25, 0.0, 2.0, 1.0;
  const LinearMeasurementSet measurements(rows);
  const MeasurementData data = two_device_data();

  std::vector<DeviceData> doubled_devices;
  for (int j = 0; j < data.device_count(); ++j) {
    DeviceData dev = data.device(j);
    dev.values.insert(dev.values.end(), data.device(j).values.begin(),
                      data.device(j).values.end());
    doubled_devices.push_back(std::move(dev));
  }
  const MeasurementData doubled(doubled_devices);

  const AffineMap base = assemble_wme_affine(measurements, data);
  const AffineMap twice = assemble_wme_affine(measurements, doubled);
  const double root2 = std::sqrt(2.0);
  CHECK((twice.matrix() - root2 * base.matrix()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((twice.bias() - root2 * base.bias()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("push-forward variance grows linearly in repeats, shrinks with noise") {
  Eigen::RowVectorXd m(2);
  m << 1.0, 2.0;
  Matrix sigma_init(2, 2);
  sigma_init << 1.0, 0.25, 0.25, 0.5;
  const double base = m * sigma_init * m.transpose();

  CHECK(wme_predicted_variance(m, sigma_init, 1, 1.0) == doctest::Approx(base));
  CHECK(wme_predicted_variance(m, sigma_init, 10, 1.0) == doctest::Approx(10.0 * base));
  CHECK(wme_predicted_variance(m, sigma_init, 20, 1.0) ==
        doctest::Approx(2.0 * wme_predicted_variance(m, sigma_init, 10, 1.0)));
  // Doubling the noise level quarters the variance at a fixed repeat count.
  CHECK(wme_predicted_variance(m, sigma_init, 10, 2.0) ==
        doctest::Approx(0.25 * wme_predicted_variance(m, sigma_init, 10, 1.0)));
}

TEST_CASE("minimum repeat counts for unit-variance dominance") {
  const Matrix identity1 = Matrix::Identity(1, 1);

  // One clean device: variance N, need strictly more than 1.
  CHECK(min_data_for_predictability(LinearMeasurementSet(identity1), identity1, {1.0}) ==
        std::vector<long>{2});

  // One noisy device: variance N / 100, so 101 repeats.
  CHECK(min_data_for_predictability(LinearMeasurementSet(identity1), identity1, {10.0}) ==
        std::vector<long>{101});

  // Two independent devices with different noise: counts scale with sigma^2.
  const Matrix identity2 = Matrix::Identity(2, 2);
  const std::vector<long> counts = min_data_for_predictability(
      LinearMeasurementSet(identity2), identity2, {1.0, 2.0});
  CHECK(counts == std::vector<long>({2, 5}));

  // The returned counts actually dominate and are minimal on the ray.
  Matrix a(2, 2);
  a << std::sqrt(2.0), 0.0, 0.0, std::sqrt(5.0) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a * identity2 * a.transpose());
  CHECK(eig.eigenvalues().minCoeff() > 1.0);

  CHECK_THROWS_AS(min_data_for_predictability(
                      LinearMeasurementSet(Matrix::Ones(2, 2)), identity2, {1.0, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(min_data_for_predictability(LinearMeasurementSet(identity1), identity1,
                                              {1.0}, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      min_data_for_predictability(LinearMeasurementSet(identity1), identity1, {-1.0}),
      std::invalid_argument);
}

TEST_CASE("residual matrix entries and ordering") {
  const MeasurementData data = two_device_data();
  Matrix outputs(2, 6);
  outputs << 2.0, 2.0, 2.0, 2.0, 1.0, 1.0,
             0.0, 0.0, 0.0, 0.0, 0.0, 0.0;
  const ResidualMatrix residuals = build_residual_matrix(outputs, data);

  REQUIRE(residuals.x.rows() == 2);
  REQUIRE(residuals.x.cols() == 6);
  CHECK(residuals.x(0, 0) == doctest::Approx(1.0));    // (2 - 1) / 1
  CHECK(residuals.x(0, 3) == doctest::Approx(-2.0));   // (2 - 4) / 1
  CHECK(residuals.x(0, 4) == doctest::Approx(1.0));    // (1 - 0.5) / 0.5
  CHECK(residuals.x(1, 5) == doctest::Approx(-3.0));   // (0 - 1.5) / 0.5

  REQUIRE(residuals.ordering.size() == 6);
  CHECK(residuals.ordering[0].device == 0);
  CHECK(residuals.ordering[0].repeat == 0);
  CHECK(residuals.ordering[3].device == 0);
  CHECK(residuals.ordering[3].repeat == 3);
  CHECK(residuals.ordering[4].device == 1);
  CHECK(residuals.ordering[4].repeat == 0);

  const Vector row = zscored_residual_row(outputs.row(0).transpose(), data);
  CHECK((row - residuals.x.row(0).transpose()).cwiseAbs().maxCoeff() <= 1e-15);

  CHECK_THROWS_AS(build_residual_matrix(Matrix::Zero(2, 5), data), std::invalid_argument);
}

TEST_CASE("principal directions match a dense eigendecomposition") {
  Rng rng(302);
  const Eigen::Index s = 60;
  const Eigen::Index n = 6;
  ResidualMatrix residuals;
  residuals.x = rng.normal_matrix(s, n);
  residuals.x.col(0) *= 4.0;  // make the spectrum well separated
  residuals.x.col(1) *= 2.0;
  residuals.ordering.resize(static_cast<std::size_t>(n));

  const PcaMap map = fit_pca(residuals, 1.0);
  REQUIRE(map.components().cols() == n);

  // Oracle: eigendecomposition of the sample covariance of centered rows.
  const Eigen::RowVectorXd mean = residuals.x.colwise().mean();
  const Matrix centered = residuals.x.rowwise() - mean;
  const Matrix cov = centered.transpose() * centered / static_cast<double>(s - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);

  for (Eigen::Index k = 0; k < n; ++k) {
    const double expected = eig.eigenvalues()(n - 1 - k);  // descending
    CHECK(map.explained_variance()(k) == doctest::Approx(expected).epsilon(1e-9));
    const Vector oracle_dir = eig.eigenvectors().col(n - 1 - k);
    const double alignment = std::abs(oracle_dir.dot(map.components().col(k)));
    CHECK(alignment == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(map.explained_variance_ratio().sum() == doctest::Approx(1.0).epsilon(1e-12));

  // Deterministic sign: the largest-magnitude entry of each component is
  // positive.
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index at = 0;
    map.components().col(k).cwiseAbs().maxCoeff(&at);
    CHECK(map.components()(at, k) > 0.0);
  }

  // Projection works on raw rows.
  const Vector raw = residuals.x.row(3).transpose();
  const Vector projected = q_pca(map, raw);
  REQUIRE(projected.size() == map.n_components());
  CHECK((projected -
         (map.components().leftCols(map.n_components()).transpose() * raw))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);

  const Matrix batch = q_pca_batch(map, residuals.x);
  CHECK((batch.row(3).transpose() - q_pca(map, raw)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("component count selection by explained-variance threshold") {
  // Exact rank-2 ensemble: two orthogonal directions with variance 9 and 1.
  const Eigen::Index s = 40;
  Rng rng(303);
  const Vector a = rng.normal_vector(s);
  const Vector b = rng.normal_vector(s);
  ResidualMatrix residuals;
  residuals.x = Matrix::Zero(s, 4);
  residuals.x.col(0) = 3.0 * a;
  residuals.x.col(1) = 1.0 * b;
  residuals.ordering.resize(4);

  const PcaMap dominant = fit_pca(residuals, 0.5);
  CHECK(dominant.n_components() == 1);

  const PcaMap both = fit_pca(residuals, 0.999999);
  CHECK(both.n_components() == 2);

  const PcaMap capped = fit_pca(residuals, 0.999999, 1);
  CHECK(capped.n_components() == 1);

  CHECK_THROWS_AS(fit_pca(residuals, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(fit_pca(residuals, 1.1), std::invalid_argument);
  CHECK_THROWS_AS(fit_pca(residuals, 0.95, 99), std::invalid_argument);

  ResidualMatrix tiny;
  tiny.x = Matrix::Ones(1, 3);
  CHECK_THROWS_AS(fit_pca(tiny, 0.95), std::invalid_argument);

  ResidualMatrix flat;
  flat.x = Matrix::Ones(5, 3);
  CHECK_THROWS_AS(fit_pca(flat, 0.95), std::runtime_error);
}
