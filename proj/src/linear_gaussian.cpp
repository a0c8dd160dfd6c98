#include "mudest/linear_gaussian.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace mudest {

std::string method_name(Method method) {
  switch (method) {
    case Method::Mud: return "MUD";
    case Method::MudAlt: return "MUD-alt";
    case Method::Map: return "MAP";
    case Method::Lsq: return "LSQ";
  }
  throw std::logic_error("method_name: unknown method");
}

LinearGaussianProblem::LinearGaussianProblem(AffineMap map, GaussianDensity initial,
                                             GaussianDensity observed)
    : map_(std::move(map)), initial_(std::move(initial)), observed_(std::move(observed)) {
  if (initial_.dim() != map_.input_dim()) {
    throw std::invalid_argument("LinearGaussianProblem: initial density dimension != map input");
  }
  if (observed_.dim() != map_.output_dim()) {
    throw std::invalid_argument("LinearGaussianProblem: observed density dimension != map output");
  }
  predicted_covariance_ =
      symmetrized(map_.matrix() * initial_.covariance() * map_.matrix().transpose());
}

Vector LinearGaussianProblem::residual() const {
  return observed_.mean() - map_.apply(initial_.mean());
}

LinearGaussianProblem LinearGaussianProblem::scaled_initial(double alpha) const {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("scaled_initial: alpha must be positive");
  }
  return LinearGaussianProblem(
      map_, GaussianDensity(initial_.mean(), alpha * initial_.covariance()), observed_);
}

Matrix predicted_covariance(const LinearGaussianProblem& problem) {
  return problem.predicted_covariance();
}

namespace {

Predictability predictability_of(const Matrix& predicted, const Matrix& observed) {
  Eigen::SelfAdjointEigenSolver<Matrix> pred_eig(predicted, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrix> obs_eig(observed, Eigen::EigenvaluesOnly);
  const double margin = pred_eig.eigenvalues().minCoeff() - obs_eig.eigenvalues().maxCoeff();
  return Predictability{margin > 0.0, margin};
}

}  // namespace

Predictability check_predictability(const LinearGaussianProblem& problem) {
  return predictability_of(problem.predicted_covariance(), problem.observed().covariance());
}

EstimateReport mud_point(const LinearGaussianProblem& problem) {
  if (problem.data_dim() > problem.param_dim()) {
    throw std::invalid_argument(
        "mud_point: over-determined problem (more data than parameters); use least_squares");
  }
  const Predictability pred = check_predictability(problem);
  const SpdFactorization pred_fact(problem.predicted_covariance());
  const Vector gain = pred_fact.solve(problem.residual());

  EstimateReport report;
  report.method = Method::Mud;
  report.predictability_ok = pred.ok;
  report.predictability_margin = pred.margin;
  report.estimate = problem.initial().mean() +
                    problem.initial().covariance() * problem.map().matrix().transpose() * gain;
  if (pred.ok) {
    report.covariance = updated_covariance(problem);
  }
  return report;
}

Matrix updated_covariance(const LinearGaussianProblem& problem, bool allow_pseudo_inverse) {
  const Matrix& pred = problem.predicted_covariance();
  const SpdFactorization pred_fact(pred);
  if (!pred_fact.full_rank() && !allow_pseudo_inverse) {
    throw std::invalid_argument(
        "updated_covariance: predicted covariance is numerically singular "
        "(pass allow_pseudo_inverse to truncate)");
  }
  const Matrix cross = problem.initial().covariance() * problem.map().matrix().transpose();
  // S_pred^+ (S_pred - S_obs) S_pred^+ applied symmetrically.
  const Matrix inner = pred_fact.solve(
      Matrix(pred_fact.solve(Matrix(pred - problem.observed().covariance())).transpose()));
  return symmetrized(problem.initial().covariance() - cross * inner * cross.transpose());
}

EstimateReport mud_point_alt(const LinearGaussianProblem& problem) {
  if (problem.data_dim() > problem.param_dim()) {
    throw std::invalid_argument(
        "mud_point_alt: over-determined problem (more data than parameters); use least_squares");
  }
  const Predictability pred = check_predictability(problem);
  if (!pred.ok) {
    throw std::invalid_argument("mud_point_alt: predictability margin is not positive");
  }
  const SpdFactorization obs_fact(problem.observed().covariance());
  if (!obs_fact.full_rank()) {
    throw std::invalid_argument("mud_point_alt: observed covariance is singular");
  }
  const Matrix up = updated_covariance(problem);

  EstimateReport report;
  report.method = Method::MudAlt;
  report.predictability_ok = pred.ok;
  report.predictability_margin = pred.margin;
  report.estimate = problem.initial().mean() + up * problem.map().matrix().transpose() *
                                                   obs_fact.solve(problem.residual());
  report.covariance = up;
  return report;
}

Matrix effective_regularization(const LinearGaussianProblem& problem) {
  const SpdFactorization init_fact(problem.initial().covariance());
  if (!init_fact.full_rank()) {
    throw std::invalid_argument("effective_regularization: initial covariance is singular");
  }
  const SpdFactorization pred_fact(problem.predicted_covariance());
  const Matrix& a = problem.map().matrix();
  return symmetrized(init_fact.inverse() - a.transpose() * pred_fact.solve(Matrix(a)));
}

double objective_tikhonov(const LinearGaussianProblem& problem, const Vector& lambda) {
  if (lambda.size() != problem.param_dim()) {
    throw std::invalid_argument("objective_tikhonov: parameter dimension mismatch");
  }
  const SpdFactorization obs_fact(problem.observed().covariance());
  const SpdFactorization init_fact(problem.initial().covariance());
  if (!obs_fact.full_rank() || !init_fact.full_rank()) {
    throw std::invalid_argument("objective_tikhonov: singular covariance");
  }
  const Vector data_misfit = problem.observed().mean() - problem.map().apply(lambda);
  const Vector prior_misfit = lambda - problem.initial().mean();
  return data_misfit.dot(obs_fact.solve(data_misfit)) +
         prior_misfit.dot(init_fact.solve(prior_misfit));
}

double objective_data_consistent(const LinearGaussianProblem& problem, const Vector& lambda) {
  const double tik = objective_tikhonov(problem, lambda);
  const SpdFactorization pred_fact(problem.predicted_covariance());
  if (!pred_fact.full_rank()) {
    throw std::invalid_argument("objective_data_consistent: singular predicted covariance");
  }
  const Vector push = problem.map().matrix() * (lambda - problem.initial().mean());
  return tik - push.dot(pred_fact.solve(push));
}

EstimateReport map_point(const LinearGaussianProblem& problem) {
  const Matrix& a = problem.map().matrix();
  const Matrix& s_init = problem.initial().covariance();
  const Matrix& s_obs = problem.observed().covariance();
  const Matrix innovation = symmetrized(problem.predicted_covariance() + s_obs);
  const SpdFactorization innov_fact(innovation);

  const Matrix cross = s_init * a.transpose();
  EstimateReport report;
  report.method = Method::Map;
  const Predictability pred = check_predictability(problem);
  report.predictability_ok = pred.ok;
  report.predictability_margin = pred.margin;
  report.estimate =
      problem.initial().mean() + cross * innov_fact.solve(problem.residual());

  const Matrix posterior = symmetrized(s_init - cross * innov_fact.solve(Matrix(cross.transpose())));
  report.covariance = posterior;

  // Information-form cross-check (A^T S_obs^{-1} A + S_init^{-1})^{-1}; only
  // meaningful when both inverses exist and conditioning permits.
  const SpdFactorization obs_fact(s_obs);
  const SpdFactorization init_fact(s_init);
  if (obs_fact.full_rank() && init_fact.full_rank()) {
    const Matrix info =
        symmetrized(a.transpose() * obs_fact.solve(Matrix(a)) + init_fact.inverse());
    const SpdFactorization info_fact(info);
    if (info_fact.full_rank()) {
      const Matrix direct = info_fact.inverse();
      report.covariance_cross_check = (direct - posterior).norm() / posterior.norm();
    }
  }
  return report;
}

Vector least_squares(const AffineMap& map, const Vector& mu_obs) {
  if (mu_obs.size() != map.output_dim()) {
    throw std::invalid_argument("least_squares: data dimension mismatch");
  }
  return pseudo_inverse(map.matrix()) * (mu_obs - map.bias());
}

}  // namespace mudest
