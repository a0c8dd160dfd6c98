#pragma once

#include "mudest/density.hpp"
#include "mudest/linear_gaussian.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

namespace mudest {

/// Deterministic random source. All matrix/vector fills are row-major so a
/// seed pins every experiment exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi);
  double normal(double mean = 0.0, double sd = 1.0);

  Vector uniform_vector(Eigen::Index n, double lo, double hi);
  Vector normal_vector(Eigen::Index n);
  Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi);
  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Draws from a Gaussian via the symmetric square root of its covariance
/// (works for semi-definite covariances too). Rows are samples.
Matrix sample_gaussian(Rng& rng, const GaussianDensity& density, Eigen::Index samples);

namespace fixtures {

/// Two parameters, one output: A = [1 1], b = 0, initial N((0.25, 0.25),
/// [[1, -0.25], [-0.25, 0.5]]), observed N(1, 0.25). Known closed forms:
/// updated maximizer (0.625, 0.375), posterior mode (0.55, 0.35).
LinearGaussianProblem reference_problem_2d();
Vector reference_mud_2d();
Vector reference_map_2d();

/// One-parameter quintic map: uniform initial density on [-1, 1],
/// q = lam^5, observed N(0.25, 0.1^2). The exact maximizer is 0.25^(1/5).
struct QuinticFixture {
  SampleEnsemble ensemble;
  std::shared_ptr<const Density> observed;
  double exact_mud = 0.0;
};
QuinticFixture quintic(std::uint64_t seed, Eigen::Index samples);

/// Repeated noisy observations of the quintic output at the reference value
/// 0.25, for the sample-mean observed density variant.
std::vector<double> quintic_data(std::uint64_t seed, int count, double sigma = 0.1);

/// Linear-Gaussian ensembles with exactly Gaussian observed and predicted
/// densities, so the sample update can be checked against closed forms with
/// no kernel-estimate error.
struct AnalyticUpdateFixture {
  LinearGaussianProblem problem;
  SampleEnsemble ensemble;
  std::shared_ptr<const Density> observed;
  std::shared_ptr<const Density> predicted;
};
AnalyticUpdateFixture linear_update_1d(std::uint64_t seed, Eigen::Index samples);
AnalyticUpdateFixture linear_update_2d(std::uint64_t seed, Eigen::Index samples);

/// Synthetic measurement surrogates for the principal-component pipeline.
/// Both expose two parameters on [0.5, 1.5]^2; outputs are evaluated on a
/// fixed grid of measurement locations, one device per location.
struct SurrogateFixture {
  SampleEnsemble ensemble;  // qoi rows are raw outputs at the data points
  MeasurementData data;
  Vector lambda_ref;
};

/// Each parameter drives its own output channel with O(1) sensitivity, so
/// two components are informative.
SurrogateFixture surrogate_two_channel(std::uint64_t seed, Eigen::Index samples,
                                       int points_per_channel = 20);

/// The second parameter enters through a 1% coupling, so only one component
/// is informative and a two-component update is starved of prediction mass.
SurrogateFixture surrogate_weak_second(std::uint64_t seed, Eigen::Index samples,
                                       int points_per_channel = 40);

}  // namespace fixtures
}  // namespace mudest
