#pragma once

#include "mudest/density.hpp"
#include "mudest/fixtures.hpp"
#include "mudest/io.hpp"
#include "mudest/linear_gaussian.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mudest {

struct RunConfig {
  std::string kind;
  std::map<std::string, std::string> inputs;  // named input file paths
  std::uint64_t seed = 1;
  BandwidthRule bandwidth = BandwidthRule::Scott;
  double variance_threshold = 0.95;
  DiagnosticBand band{};
  std::string out_dir = "mudest-out";
  bool strict = false;
  TableFormat format = TableFormat::Csv;
  bool write_files = true;
  std::vector<double> alphas{0.001, 0.01, 0.1, 10.0};
  /// Empty: candidate counts 1..n* where n* comes from the variance threshold.
  std::vector<int> pca_candidates{};
  Eigen::Index sample_count = 1000;
};

struct EstimateEntry {
  std::string method;
  double alpha = 1.0;
  Vector estimate;
  std::optional<double> relative_error;
  bool predictability_ok = true;
  double predictability_margin = 0.0;
  std::optional<long> data_count;
};

struct RunReport {
  RunConfig config;
  std::vector<EstimateEntry> estimates;
  std::optional<Diagnostic> diagnostic;
  std::vector<std::string> warnings;
  nlohmann::json tables = nlohmann::json::object();
  double seconds = 0.0;

  /// Full serialization; the timing object is omitted when include_timing is
  /// false so reruns with one seed compare byte-identical.
  nlohmann::json to_json(bool include_timing = true) const;
};

/// ||estimate - reference|| / ||reference|| (absolute when the reference is
/// the zero vector).
double estimate_error(const Vector& estimate, const Vector& reference);

/// Reads an ensemble table and attaches the initial density; a null density
/// means "estimate it", which fits a kernel density on the parameter samples.
SampleEnsemble ingest_ensemble(const std::string& path,
                               std::shared_ptr<const Density> initial_density = nullptr);

/// Closed-form solves on a problem file: MUD and MAP per alpha in the
/// config (problem-file alphas win), least squares once. Emits report.json
/// and an errors table.
RunReport run_linear_gaussian(const RunConfig& config);

/// Sample-based update of an ensemble file against an observed density spec.
RunReport run_density(const RunConfig& config);

/// Assembles the weighted-mean-error affine map from a measurement-set file
/// and an observation table, solves the linear-Gaussian problem against the
/// standard-normal observed density, and reports the minimum repeat counts
/// needed for predictability.
RunReport run_wme(const RunConfig& config);

/// Residual principal-component pipeline on an ensemble of raw outputs:
/// component selection by the e_r diagnostic, then the sample update.
RunReport run_pca_pipeline(const RunConfig& config);

/// Quintic-map walkthrough: one ensemble, accumulating observation batches,
/// a MUD estimate and diagnostic per batch size.
RunReport experiment_illustrative(const RunConfig& config);

/// Updated-covariance spectrum of a repeated-observation problem as the
/// repeat count grows by decades: uninformed directions hold the initial
/// variance, informed ones decay linearly with the data volume.
RunReport experiment_spectral_decay(const RunConfig& config);

/// Estimator error as the observation dimension m grows on a fixed
/// 100-parameter problem (noiseless data), for several prior scalings.
RunReport experiment_dimension_sweep(const RunConfig& config);

/// Same problem with m fixed at 100 and the map truncated to rank r.
RunReport experiment_rank_sweep(const RunConfig& config);

/// Writes report.json into the config's output directory.
void write_report(const RunReport& report);

}  // namespace mudest
