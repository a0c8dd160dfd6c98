#include "mudest/fixtures.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace mudest {

double Rng::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

double Rng::normal(double mean, double sd) {
  std::normal_distribution<double> dist(mean, sd);
  return dist(engine_);
}

Vector Rng::uniform_vector(Eigen::Index n, double lo, double hi) {
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = uniform(lo, hi);
  return out;
}

Vector Rng::normal_vector(Eigen::Index n) {
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = normal();
  return out;
}

Matrix Rng::uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  Matrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = uniform(lo, hi);
  }
  return out;
}

Matrix Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
  Matrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = normal();
  }
  return out;
}

Matrix sample_gaussian(Rng& rng, const GaussianDensity& density, Eigen::Index samples) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(density.covariance());
  const Matrix root =
      eig.eigenvectors() *
      eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
      eig.eigenvectors().transpose();
  const Matrix z = rng.normal_matrix(samples, density.dim());
  return (z * root).rowwise() + density.mean().transpose();
}

namespace fixtures {

LinearGaussianProblem reference_problem_2d() {
  Matrix a(1, 2);
  a << 1.0, 1.0;
  Matrix s_init(2, 2);
  s_init << 1.0, -0.25, -0.25, 0.5;
  Matrix s_obs(1, 1);
  s_obs << 0.25;
  return LinearGaussianProblem(
      AffineMap(a, Vector::Zero(1)),
      GaussianDensity(Vector::Constant(2, 0.25), s_init),
      GaussianDensity(Vector::Constant(1, 1.0), s_obs));
}

Vector reference_mud_2d() {
  Vector v(2);
  v << 0.625, 0.375;
  return v;
}

Vector reference_map_2d() {
  Vector v(2);
  v << 0.55, 0.35;
  return v;
}

QuinticFixture quintic(std::uint64_t seed, Eigen::Index samples) {
  Rng rng(seed);
  Matrix params = rng.uniform_matrix(samples, 1, -1.0, 1.0);
  Matrix qoi = params.array().pow(5).matrix();

  QuinticFixture fx;
  fx.ensemble = make_ensemble(
      std::move(params), std::move(qoi),
      std::make_shared<UniformBoxPdf>(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)));
  fx.observed = std::make_shared<GaussianPdf>(
      GaussianDensity(Vector::Constant(1, 0.25), Matrix::Constant(1, 1, 0.01)));
  fx.exact_mud = std::pow(0.25, 0.2);
  return fx;
}

std::vector<double> quintic_data(std::uint64_t seed, int count, double sigma) {
  Rng rng(seed);
  std::vector<double> data(static_cast<std::size_t>(count));
  for (double& d : data) d = 0.25 + sigma * rng.normal();
  return data;
}

AnalyticUpdateFixture linear_update_1d(std::uint64_t seed, Eigen::Index samples) {
  Matrix a = Matrix::Identity(1, 1);
  const GaussianDensity initial(Vector::Zero(1), Matrix::Identity(1, 1));
  const GaussianDensity observed(Vector::Constant(1, 0.5), Matrix::Constant(1, 1, 0.25));
  LinearGaussianProblem problem(AffineMap(a, Vector::Zero(1)), initial, observed);

  Rng rng(seed);
  Matrix params = sample_gaussian(rng, initial, samples);
  Matrix qoi = problem.map().apply_rows(params);

  AnalyticUpdateFixture fx{std::move(problem),
                           make_ensemble(std::move(params), std::move(qoi),
                                         std::make_shared<GaussianPdf>(initial)),
                           std::make_shared<GaussianPdf>(observed),
                           std::make_shared<GaussianPdf>(GaussianDensity(
                               Vector::Zero(1), Matrix::Identity(1, 1)))};
  return fx;
}

AnalyticUpdateFixture linear_update_2d(std::uint64_t seed, Eigen::Index samples) {
  Matrix a(2, 2);
  a << 1.0, 0.3, 0.0, 1.0;
  Vector b(2);
  b << 0.1, -0.2;
  Vector lam0(2);
  lam0 << 0.2, -0.1;
  Matrix s_init(2, 2);
  s_init << 1.0, 0.2, 0.2, 0.8;
  Vector mu_obs(2);
  mu_obs << 0.9, 0.3;
  const GaussianDensity initial(lam0, s_init);
  const GaussianDensity observed(mu_obs, 0.09 * Matrix::Identity(2, 2));
  LinearGaussianProblem problem(AffineMap(a, b), initial, observed);

  Rng rng(seed);
  Matrix params = sample_gaussian(rng, initial, samples);
  Matrix qoi = problem.map().apply_rows(params);
  const GaussianDensity predicted(problem.map().apply(lam0), problem.predicted_covariance());

  AnalyticUpdateFixture fx{std::move(problem),
                           make_ensemble(std::move(params), std::move(qoi),
                                         std::make_shared<GaussianPdf>(initial)),
                           std::make_shared<GaussianPdf>(observed),
                           std::make_shared<GaussianPdf>(predicted)};
  return fx;
}

namespace {

SurrogateFixture make_surrogate(std::uint64_t seed, Eigen::Index samples, int points_per_channel,
                                double coupling, double sigma, const Vector& lambda_ref,
                                bool split_channels) {
  Rng rng(seed);
  const int n_per = points_per_channel;
  const int total = split_channels ? 2 * n_per : n_per;

  // Sensitivities at the measurement grid. Split mode gives each parameter
  // its own block of points; coupled mode mixes the second parameter into
  // one shared block at the given coupling strength.
  Matrix sensitivity(total, 2);
  for (int i = 0; i < n_per; ++i) {
    const double z = static_cast<double>(i) / static_cast<double>(n_per - 1);
    if (split_channels) {
      sensitivity(i, 0) = std::sin(2.0 * std::numbers::pi * z);
      sensitivity(i, 1) = 0.0;
      sensitivity(n_per + i, 0) = 0.0;
      sensitivity(n_per + i, 1) = std::cos(2.0 * std::numbers::pi * z);
    } else {
      sensitivity(i, 0) = std::sin(2.0 * std::numbers::pi * z);
      sensitivity(i, 1) = coupling * std::cos(2.0 * std::numbers::pi * z);
    }
  }

  Matrix params = rng.uniform_matrix(samples, 2, 0.5, 1.5);
  Matrix outputs = params * sensitivity.transpose();

  const Vector truth_outputs = sensitivity * lambda_ref;
  std::vector<DeviceData> devices;
  devices.reserve(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) {
    devices.push_back(DeviceData{{truth_outputs(i) + sigma * rng.normal()}, sigma});
  }

  SurrogateFixture fx{make_ensemble(std::move(params), std::move(outputs),
                                    std::make_shared<UniformBoxPdf>(
                                        Vector::Constant(2, 0.5), Vector::Constant(2, 1.5))),
                      MeasurementData(std::move(devices)), lambda_ref};
  return fx;
}

}  // namespace

SurrogateFixture surrogate_two_channel(std::uint64_t seed, Eigen::Index samples,
                                       int points_per_channel) {
  Vector lambda_ref(2);
  lambda_ref << 0.9, 1.2;
  return make_surrogate(seed, samples, points_per_channel, 0.0, 0.3, lambda_ref, true);
}

SurrogateFixture surrogate_weak_second(std::uint64_t seed, Eigen::Index samples,
                                       int points_per_channel) {
  Vector lambda_ref(2);
  lambda_ref << 1.1, 0.8;
  return make_surrogate(seed, samples, points_per_channel, 0.01, 0.1, lambda_ref, false);
}

}  // namespace fixtures
}  // namespace mudest
