#include "mudest/density.hpp"

#include "mudest/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mudest {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2 pi)

void require_finite_rows(const Matrix& m, const char* who) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(who) + ": non-finite entries");
  }
}

}  // namespace

Vector Density::pdf_batch(const Matrix& points) const {
  if (points.cols() != dim()) {
    throw std::invalid_argument("pdf_batch: dimension mismatch");
  }
  Vector out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out(i) = pdf(points.row(i).transpose());
  }
  return out;
}

GaussianPdf::GaussianPdf(GaussianDensity density) : density_(std::move(density)) {
  auto fact = std::make_shared<SpdFactorization>(density_.covariance());
  if (!fact->full_rank()) {
    throw std::invalid_argument("GaussianPdf: covariance must be positive definite");
  }
  log_norm_ = -0.5 * (static_cast<double>(density_.dim()) * kLog2Pi + fact->log_det());
  factorization_ = std::move(fact);
}

double GaussianPdf::pdf(const Vector& x) const {
  if (x.size() != density_.dim()) {
    throw std::invalid_argument("GaussianPdf::pdf: dimension mismatch");
  }
  const Vector centered = x - density_.mean();
  const double quad = centered.dot(factorization_->solve(centered));
  return std::exp(log_norm_ - 0.5 * quad);
}

UniformBoxPdf::UniformBoxPdf(Vector lo, Vector hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() == 0 || lo_.size() != hi_.size()) {
    throw std::invalid_argument("UniformBoxPdf: bound length mismatch");
  }
  double log_vol = 0.0;
  for (Eigen::Index d = 0; d < lo_.size(); ++d) {
    if (!(hi_(d) > lo_(d))) {
      throw std::invalid_argument("UniformBoxPdf: hi must exceed lo in every dimension");
    }
    log_vol += std::log(hi_(d) - lo_(d));
  }
  density_ = std::exp(-log_vol);
}

double UniformBoxPdf::pdf(const Vector& x) const {
  if (x.size() != lo_.size()) {
    throw std::invalid_argument("UniformBoxPdf::pdf: dimension mismatch");
  }
  for (Eigen::Index d = 0; d < lo_.size(); ++d) {
    if (x(d) < lo_(d) || x(d) > hi_(d)) return 0.0;
  }
  return density_;
}

StdNormalPdf::StdNormalPdf(Eigen::Index dim) : dim_(dim) {
  if (dim_ < 1) {
    throw std::invalid_argument("StdNormalPdf: dimension must be >= 1");
  }
}

double StdNormalPdf::pdf(const Vector& x) const {
  if (x.size() != dim_) {
    throw std::invalid_argument("StdNormalPdf::pdf: dimension mismatch");
  }
  return std::exp(-0.5 * (static_cast<double>(dim_) * kLog2Pi + x.squaredNorm()));
}

double KdeModel::pdf(const Vector& x) const {
  if (x.size() != points_.cols()) {
    throw std::invalid_argument("KdeModel::pdf: dimension mismatch");
  }
  const Vector quad = ((points_.rowwise() - x.transpose()) *
                       bandwidths_.cwiseInverse().asDiagonal())
                          .rowwise()
                          .squaredNorm();
  const Eigen::ArrayXd kernels = (-0.5 * quad.array() + log_norm_).exp();
  return weights_.dot(kernels.matrix());
}

Vector KdeModel::pdf_batch(const Matrix& points) const {
  if (points.cols() != points_.cols()) {
    throw std::invalid_argument("KdeModel::pdf_batch: dimension mismatch");
  }
  Vector out(points.rows());
  parallel_for(points.rows(), [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index i = begin; i < end; ++i) {
      out(i) = pdf(points.row(i).transpose());
    }
  });
  return out;
}

Matrix KdeModel::bandwidth_matrix() const {
  return Matrix(bandwidths_.array().square().matrix().asDiagonal());
}

Vector KdeModel::mean() const {
  return points_.transpose() * weights_;
}

Matrix KdeModel::covariance() const {
  const Vector mu = mean();
  const Matrix centered = points_.rowwise() - mu.transpose();
  return centered.transpose() * weights_.asDiagonal() * centered + bandwidth_matrix();
}

KdeModel fit_kde(const Matrix& points, BandwidthRule rule, const Vector& weights) {
  if (points.rows() < 1 || points.cols() < 1) {
    throw std::invalid_argument("fit_kde: empty sample matrix");
  }
  require_finite_rows(points, "fit_kde");

  const Eigen::Index s = points.rows();
  const Eigen::Index k = points.cols();

  Vector w;
  if (weights.size() == 0) {
    w = Vector::Constant(s, 1.0 / static_cast<double>(s));
  } else {
    if (weights.size() != s) {
      throw std::invalid_argument("fit_kde: one weight per sample required");
    }
    if (weights.minCoeff() < 0.0 || !weights.allFinite()) {
      throw std::invalid_argument("fit_kde: weights must be finite and non-negative");
    }
    const double total = weights.sum();
    if (!(total > 0.0)) {
      throw std::invalid_argument("fit_kde: weights sum to zero");
    }
    w = weights / total;
  }

  const double n_eff = 1.0 / w.squaredNorm();
  const double exponent = -1.0 / (static_cast<double>(k) + 4.0);
  const double factor = rule == BandwidthRule::Scott
                            ? std::pow(n_eff, exponent)
                            : std::pow(n_eff * (static_cast<double>(k) + 2.0) / 4.0, exponent);

  const Vector mu = points.transpose() * w;
  const Matrix centered = points.rowwise() - mu.transpose();
  Vector second_moment(k);
  for (Eigen::Index d = 0; d < k; ++d) {
    second_moment(d) = (centered.col(d).array().square() * w.array()).sum();
  }
  // Reliability-weighted unbiased variance; collapses to the (s-1) divisor
  // for uniform weights.
  const double unbias = 1.0 - w.squaredNorm();

  KdeModel model;
  model.points_ = points;
  model.weights_ = std::move(w);
  model.bandwidths_ = Vector(k);
  for (Eigen::Index d = 0; d < k; ++d) {
    const double var = unbias > 0.0 ? second_moment(d) / unbias : 0.0;
    double h = factor * std::sqrt(std::max(var, 0.0));
    // Degenerate spread is judged relative to the dimension's magnitude:
    // a constant column whose weighted mean carries rounding noise must
    // still land on the floor bandwidth.
    const double hi = points.col(d).maxCoeff();
    const double lo = points.col(d).minCoeff();
    const double scale = std::max({std::abs(hi), std::abs(lo), 1.0});
    if (!(h > 1e-12 * scale) || !std::isfinite(h)) {
      h = 1e-8 * std::max(hi - lo, 1.0);
      model.add_warning("fit_kde: dimension " + std::to_string(d) +
                        " has zero spread; floor bandwidth used");
    }
    model.bandwidths_(d) = h;
  }
  model.log_norm_ =
      -0.5 * static_cast<double>(k) * kLog2Pi - model.bandwidths_.array().log().sum();
  return model;
}

SampleEnsemble make_ensemble(Matrix params, Matrix qoi,
                             std::shared_ptr<const Density> initial_density, Vector weights) {
  if (params.rows() == 0 || params.cols() == 0) {
    throw std::invalid_argument("make_ensemble: empty parameter matrix");
  }
  if (qoi.rows() != params.rows() || qoi.cols() == 0) {
    throw std::invalid_argument("make_ensemble: qoi rows must match parameter rows");
  }
  require_finite_rows(params, "make_ensemble(params)");
  require_finite_rows(qoi, "make_ensemble(qoi)");
  if (!initial_density) {
    throw std::invalid_argument("make_ensemble: initial density required");
  }
  if (initial_density->dim() != params.cols()) {
    throw std::invalid_argument("make_ensemble: initial density dimension != parameter columns");
  }
  if (weights.size() != 0) {
    if (weights.size() != params.rows()) {
      throw std::invalid_argument("make_ensemble: one weight per sample required");
    }
    if (weights.minCoeff() < 0.0 || !weights.allFinite() || !(weights.sum() > 0.0)) {
      throw std::invalid_argument("make_ensemble: weights must be non-negative with positive sum");
    }
  }
  return SampleEnsemble{std::move(params), std::move(qoi), std::move(initial_density),
                        std::move(weights)};
}

ResidualMatrix build_residual_matrix(const SampleEnsemble& ensemble,
                                     const MeasurementData& data) {
  return build_residual_matrix(ensemble.qoi, data);
}

KdeModel predicted_density(const SampleEnsemble& ensemble, BandwidthRule rule) {
  KdeModel model = fit_kde(ensemble.qoi, rule, ensemble.weights);
  if (ensemble.qoi_dim() > 5) {
    model.add_warning("predicted_density: qoi dimension " +
                      std::to_string(ensemble.qoi_dim()) +
                      " is large for a kernel density estimate");
  }
  return model;
}

UpdateResult update(const SampleEnsemble& ensemble, const Density& observed,
                    const Density& predicted) {
  if (observed.dim() != ensemble.qoi_dim() || predicted.dim() != ensemble.qoi_dim()) {
    throw std::invalid_argument("update: density dimensions must match the ensemble qoi");
  }
  const Eigen::Index s = ensemble.sample_count();

  UpdateResult result;
  if (&observed == &predicted) {
    result.ratios = Vector::Ones(s);
    result.e_r = 1.0;
  } else {
    const Vector obs_vals = observed.pdf_batch(ensemble.qoi);
    const Vector pred_vals = predicted.pdf_batch(ensemble.qoi);
    result.ratios = Vector::Zero(s);
    for (Eigen::Index i = 0; i < s; ++i) {
      if (pred_vals(i) > 0.0) {
        result.ratios(i) = obs_vals(i) / pred_vals(i);
      } else {
        ++result.zero_predicted_count;
      }
    }
    if (ensemble.weights.size() == 0) {
      result.e_r = result.ratios.mean();
    } else {
      result.e_r = ensemble.weights.dot(result.ratios) / ensemble.weights.sum();
    }
  }

  const Vector init_vals = ensemble.initial_density->pdf_batch(ensemble.params);
  result.updated = init_vals.cwiseProduct(result.ratios);

  if (!(result.updated.maxCoeff() > 0.0)) {
    throw std::runtime_error(
        "update: updated density vanished at every sample (observed data not predicted)");
  }
  result.updated.maxCoeff(&result.mud_index);
  result.mud_point = ensemble.params.row(result.mud_index).transpose();
  return result;
}

std::string verdict_name(Verdict verdict) {
  return verdict == Verdict::Ok ? "OK" : "SUSPECT";
}

Diagnostic expectation_r(const UpdateResult& result, DiagnosticBand band) {
  if (!(band.lo <= band.hi)) {
    throw std::invalid_argument("expectation_r: invalid band");
  }
  Diagnostic diag;
  diag.e_r = result.e_r;
  diag.verdict =
      (result.e_r >= band.lo && result.e_r <= band.hi) ? Verdict::Ok : Verdict::Suspect;
  return diag;
}

ComponentChoice select_pca_components(const SampleEnsemble& ensemble,
                                      const MeasurementData& data,
                                      const std::vector<int>& candidates, BandwidthRule rule,
                                      DiagnosticBand band) {
  if (candidates.empty()) {
    throw std::invalid_argument("select_pca_components: no candidates");
  }
  std::vector<int> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.front() < 1) {
    throw std::invalid_argument("select_pca_components: candidates must be >= 1");
  }

  const ResidualMatrix residuals = build_residual_matrix(ensemble, data);
  const PcaMap full = fit_pca(residuals, 1.0, 0);
  if (sorted.back() > full.components().cols()) {
    throw std::invalid_argument(
        "select_pca_components: candidate exceeds the available component count");
  }

  ComponentChoice choice;
  choice.candidates = sorted;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int count : sorted) {
    const Matrix proj = residuals.x * full.components().leftCols(count);
    const SampleEnsemble projected =
        make_ensemble(ensemble.params, proj, ensemble.initial_density, ensemble.weights);
    const KdeModel pred = predicted_density(projected, rule);
    const StdNormalPdf obs(count);
    UpdateResult res = update(projected, obs, pred);
    const Diagnostic diag = expectation_r(res, band);
    choice.e_r.push_back(diag.e_r);
    choice.verdicts.push_back(diag.verdict);
    const double dist = std::abs(diag.e_r - 1.0);
    if (dist < best_dist) {  // strict: ties keep the smaller candidate
      best_dist = dist;
      choice.chosen = count;
      choice.chosen_update = std::move(res);
    }
  }
  choice.pca = fit_pca(residuals, 1.0, choice.chosen);
  return choice;
}

Vector refine_mud_local_grid(const SampleEnsemble& ensemble, const UpdateResult& result,
                             double radius_fraction, int points_per_dim) {
  const Eigen::Index p = ensemble.param_dim();
  if (p > 3) {
    throw std::invalid_argument("refine_mud_local_grid: parameter dimension must be <= 3");
  }
  if (points_per_dim < 3 || !(radius_fraction > 0.0)) {
    throw std::invalid_argument("refine_mud_local_grid: bad grid configuration");
  }

  // Smooth the discrete updated-density values into an evaluable surrogate,
  // then climb it on a tensor grid around the best sample.
  Vector weights = result.updated.cwiseMax(0.0);
  const KdeModel smoothed = fit_kde(ensemble.params, BandwidthRule::Scott, weights);

  std::vector<Vector> axes;
  for (Eigen::Index d = 0; d < p; ++d) {
    const double range =
        ensemble.params.col(d).maxCoeff() - ensemble.params.col(d).minCoeff();
    const double radius = radius_fraction * std::max(range, 1e-12);
    axes.push_back(Vector::LinSpaced(points_per_dim, result.mud_point(d) - radius,
                                     result.mud_point(d) + radius));
  }

  Eigen::Index total = 1;
  for (Eigen::Index d = 0; d < p; ++d) total *= points_per_dim;
  Vector best = result.mud_point;
  double best_val = smoothed.pdf(result.mud_point);
  Vector candidate(p);
  for (Eigen::Index flat = 0; flat < total; ++flat) {
    Eigen::Index rem = flat;
    for (Eigen::Index d = 0; d < p; ++d) {
      candidate(d) = axes[static_cast<std::size_t>(d)](rem % points_per_dim);
      rem /= points_per_dim;
    }
    const double val = smoothed.pdf(candidate);
    if (val > best_val) {
      best_val = val;
      best = candidate;
    }
  }
  return best;
}

}  // namespace mudest
