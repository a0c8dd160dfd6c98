#pragma once

#include "mudest/linalg.hpp"

#include <optional>
#include <string>

namespace mudest {

enum class Method { Mud, MudAlt, Map, Lsq };

std::string method_name(Method method);

/// Predictability holds when every direction the observed density occupies is
/// covered by the push-forward of the initial density. For Gaussians the
/// sufficient check is min eig(pred cov) > max eig(obs cov); margin is the
/// difference.
struct Predictability {
  bool ok = false;
  double margin = 0.0;
};

/// Affine forward map A x + b together with Gaussian initial (parameter) and
/// observed (data) densities. The push-forward covariance A S_init A^T is
/// computed once on construction.
class LinearGaussianProblem {
 public:
  LinearGaussianProblem(AffineMap map, GaussianDensity initial, GaussianDensity observed);

  const AffineMap& map() const { return map_; }
  const GaussianDensity& initial() const { return initial_; }
  const GaussianDensity& observed() const { return observed_; }

  Eigen::Index param_dim() const { return map_.input_dim(); }
  Eigen::Index data_dim() const { return map_.output_dim(); }

  const Matrix& predicted_covariance() const { return predicted_covariance_; }

  /// Data misfit seen from the initial mean: mu_obs - (A lam0 + b).
  Vector residual() const;

  /// Same problem with the initial covariance scaled by alpha > 0.
  LinearGaussianProblem scaled_initial(double alpha) const;

 private:
  AffineMap map_;
  GaussianDensity initial_;
  GaussianDensity observed_;
  Matrix predicted_covariance_;
};

struct EstimateReport {
  Vector estimate;
  std::optional<Matrix> covariance;
  Method method = Method::Mud;
  bool predictability_ok = false;
  double predictability_margin = 0.0;
  /// map_point only: relative difference between the two closed-form
  /// posterior covariance expressions, as a conditioning diagnostic.
  std::optional<double> covariance_cross_check;
};

Matrix predicted_covariance(const LinearGaussianProblem& problem);

Predictability check_predictability(const LinearGaussianProblem& problem);

/// Maximizer of the updated density:
///   lam0 + S_init A^T S_pred^+ (mu_obs - b - A lam0).
/// Violated predictability is reported in the flags, not fatal. Requires
/// m <= p; over-determined problems belong to least_squares.
EstimateReport mud_point(const LinearGaussianProblem& problem);

/// Equivalent form routed through the updated covariance:
///   lam0 + S_up A^T S_obs^{-1} (mu_obs - b - A lam0).
/// Requires a positive predictability margin and invertible S_obs.
EstimateReport mud_point_alt(const LinearGaussianProblem& problem);

/// Covariance of the updated density,
///   S_init - S_init A^T S_pred^{-1} (S_pred - S_obs) S_pred^{-1} A S_init.
/// Positive semi-definite whenever predictability holds. A singular
/// predicted covariance is an error unless allow_pseudo_inverse is set.
Matrix updated_covariance(const LinearGaussianProblem& problem,
                          bool allow_pseudo_inverse = false);

/// The data-consistent objective's regularization operator
///   R = S_init^{-1} - A^T S_pred^{-1} A,
/// positive semi-definite with rank p - m for a full-row-rank map.
Matrix effective_regularization(const LinearGaussianProblem& problem);

/// Classic Tikhonov functional
///   ||mu_obs - A lam - b||^2_{S_obs^{-1}} + ||lam - lam0||^2_{S_init^{-1}}.
double objective_tikhonov(const LinearGaussianProblem& problem, const Vector& lambda);

/// Data-consistent functional: the Tikhonov value minus the push-forward
/// penalty ||A(lam - lam0)||^2_{S_pred^{-1}}; its minimizer is the MUD point.
double objective_data_consistent(const LinearGaussianProblem& problem, const Vector& lambda);

/// Bayesian posterior mode under Gaussian prior/likelihood, computed through
/// the gain form lam0 + S_init A^T (S_pred + S_obs)^{-1} (mu_obs - b - A lam0)
/// which stays stable as S_obs -> 0. The returned covariance uses the
/// rank-update form; the information form is cross-checked when S_obs is
/// invertible and the relative difference is reported.
EstimateReport map_point(const LinearGaussianProblem& problem);

/// Minimum-norm least squares A^+ (mu_obs - b).
Vector least_squares(const AffineMap& map, const Vector& mu_obs);

}  // namespace mudest
