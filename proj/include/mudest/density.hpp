#pragma once

#include "mudest/linalg.hpp"
#include "mudest/qoi_maps.hpp"

#include <memory>
#include <string>
#include <vector>

namespace mudest {

/// Evaluable probability density on R^dim.
class Density {
 public:
  virtual ~Density() = default;
  virtual Eigen::Index dim() const = 0;
  virtual double pdf(const Vector& x) const = 0;
  /// Evaluates each row of points; overridden where batching pays off.
  virtual Vector pdf_batch(const Matrix& points) const;
};

/// Multivariate normal pdf; the covariance must be numerically positive
/// definite (evaluation needs its inverse and determinant).
class GaussianPdf final : public Density {
 public:
  explicit GaussianPdf(GaussianDensity density);

  Eigen::Index dim() const override { return density_.dim(); }
  double pdf(const Vector& x) const override;
  const GaussianDensity& density() const { return density_; }

 private:
  GaussianDensity density_;
  std::shared_ptr<const SpdFactorization> factorization_;
  double log_norm_ = 0.0;
};

/// Uniform density on the axis-aligned box [lo, hi].
class UniformBoxPdf final : public Density {
 public:
  UniformBoxPdf(Vector lo, Vector hi);

  Eigen::Index dim() const override { return lo_.size(); }
  double pdf(const Vector& x) const override;
  const Vector& lo() const { return lo_; }
  const Vector& hi() const { return hi_; }

 private:
  Vector lo_;
  Vector hi_;
  double density_ = 0.0;
};

/// Product of independent standard normals.
class StdNormalPdf final : public Density {
 public:
  explicit StdNormalPdf(Eigen::Index dim);

  Eigen::Index dim() const override { return dim_; }
  double pdf(const Vector& x) const override;

 private:
  Eigen::Index dim_;
};

enum class BandwidthRule { Scott, Silverman };

/// Gaussian-kernel density estimate with a diagonal bandwidth matrix chosen
/// per dimension. Weighted fits use the effective sample size in the
/// bandwidth rule. A dimension with (numerically) zero spread gets the floor
/// bandwidth 1e-8 * max(range, 1) and a warning on the model.
class KdeModel final : public Density {
 public:
  KdeModel() = default;

  Eigen::Index dim() const override { return points_.cols(); }
  double pdf(const Vector& x) const override;
  Vector pdf_batch(const Matrix& points) const override;

  Eigen::Index sample_count() const { return points_.rows(); }
  const Matrix& points() const { return points_; }
  const Vector& weights() const { return weights_; }
  /// Diagonal SPD bandwidth matrix (squared per-dimension bandwidths).
  Matrix bandwidth_matrix() const;
  const Vector& bandwidths() const { return bandwidths_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

  /// Mean of the mixture (the weighted sample mean).
  Vector mean() const;
  /// Covariance of the mixture: weighted sample covariance + bandwidth matrix.
  Matrix covariance() const;

 private:
  friend KdeModel fit_kde(const Matrix&, BandwidthRule, const Vector&);

  Matrix points_;
  Vector weights_;     // normalized to sum 1
  Vector bandwidths_;  // per-dimension h_d > 0
  double log_norm_ = 0.0;
  std::vector<std::string> warnings_;
};

/// points is samples x dim; weights empty means uniform. Scott's factor is
/// n_eff^(-1/(dim+4)), Silverman's (n_eff (dim+2)/4)^(-1/(dim+4)), both
/// multiplying the weighted per-dimension standard deviation.
KdeModel fit_kde(const Matrix& points, BandwidthRule rule = BandwidthRule::Scott,
                 const Vector& weights = Vector());

/// Parameter samples with their mapped quantities of interest and the
/// evaluable density the parameters were drawn from. Empty weights mean
/// uniform.
struct SampleEnsemble {
  Matrix params;  // s x p
  Matrix qoi;     // s x m
  std::shared_ptr<const Density> initial_density;
  Vector weights;

  Eigen::Index sample_count() const { return params.rows(); }
  Eigen::Index param_dim() const { return params.cols(); }
  Eigen::Index qoi_dim() const { return qoi.cols(); }
};

SampleEnsemble make_ensemble(Matrix params, Matrix qoi,
                             std::shared_ptr<const Density> initial_density,
                             Vector weights = Vector());

/// Convenience overload: z-scored residual matrix straight from an ensemble's
/// raw outputs (samples x total points) against observed data.
ResidualMatrix build_residual_matrix(const SampleEnsemble& ensemble,
                                     const MeasurementData& data);

/// KDE of the ensemble's QoI rows, the push-forward of the initial density
/// through the map that produced them. Warns when the QoI dimension is large
/// enough (> 5) to make the KDE unreliable.
KdeModel predicted_density(const SampleEnsemble& ensemble,
                           BandwidthRule rule = BandwidthRule::Scott);

struct UpdateResult {
  /// r_k = observed(q_k) / predicted(q_k); 0 where the predicted density
  /// vanished under the observed one.
  Vector ratios;
  /// Updated density values at the samples: initial(lam_k) * r_k.
  Vector updated;
  /// Weighted sample mean of the ratios; 1 within noise when the observed
  /// density was predictable.
  double e_r = 0.0;
  Eigen::Index mud_index = 0;
  Vector mud_point;
  long zero_predicted_count = 0;
};

/// Sample-based density update. Passing the same object as observed and
/// predicted yields exact unit ratios (identity update). Throws when every
/// ratio is zero (the observed density sits where nothing was predicted).
UpdateResult update(const SampleEnsemble& ensemble, const Density& observed,
                    const Density& predicted);

enum class Verdict { Ok, Suspect };

std::string verdict_name(Verdict verdict);

struct DiagnosticBand {
  double lo = 0.9;
  double hi = 1.1;
};

struct Diagnostic {
  double e_r = 0.0;
  Verdict verdict = Verdict::Suspect;
};

/// Sample-mean diagnostic of the update: OK iff e_r lies inside the band.
Diagnostic expectation_r(const UpdateResult& result, DiagnosticBand band = {});

struct ComponentChoice {
  std::vector<int> candidates;
  std::vector<double> e_r;
  std::vector<Verdict> verdicts;
  int chosen = 0;
  PcaMap pca;
  UpdateResult chosen_update;
};

/// Runs the principal-component pipeline once per candidate component count:
/// fit on the z-scored residuals, project, update against the standard
/// normal observed density, and score e_r. Chooses the candidate whose e_r
/// is closest to 1; ties break toward fewer components.
ComponentChoice select_pca_components(const SampleEnsemble& ensemble,
                                      const MeasurementData& data,
                                      const std::vector<int>& candidates,
                                      BandwidthRule rule = BandwidthRule::Scott,
                                      DiagnosticBand band = {});

/// Optional refinement of the sample-argmax point: smooths the updated
/// values into a weighted kernel density over the parameters, then returns
/// the maximizer of that surface on a tensor grid around the best sample
/// (parameter dimension <= 3, grid centered so the best sample can win ties).
/// Off by default in every pipeline.
Vector refine_mud_local_grid(const SampleEnsemble& ensemble, const UpdateResult& result,
                             double radius_fraction = 0.05, int points_per_dim = 21);

}  // namespace mudest
