// Command-line front end: closed-form linear-Gaussian solves, sample-based
// density updates, weighted-mean-error and principal-component pipelines, and
// the built-in reproducibility experiments.

#include "mudest/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

namespace {

using mudest::RunConfig;
using mudest::RunReport;
using mudest::Vector;

std::string format_vector(const Vector& v) {
  const Eigen::Index shown = std::min<Eigen::Index>(v.size(), 6);
  std::string out = "[";
  for (Eigen::Index i = 0; i < shown; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v(i));
    if (i) out += ", ";
    out += buf;
  }
  if (shown < v.size()) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), ", ... %lld total, |v| = %.6g",
                  static_cast<long long>(v.size()), v.norm());
    out += buf;
  }
  out += "]";
  return out;
}

void print_summary(const RunReport& report) {
  std::cout << "run: " << report.config.kind << "\n";
  for (const auto& entry : report.estimates) {
    std::cout << "  " << entry.method;
    if (entry.alpha != 1.0) std::cout << " (alpha=" << entry.alpha << ")";
    if (entry.data_count) std::cout << " (n=" << *entry.data_count << ")";
    std::cout << ": " << format_vector(entry.estimate);
    if (entry.relative_error) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3e", *entry.relative_error);
      std::cout << "  error=" << buf;
    }
    if (!entry.predictability_ok) std::cout << "  [predictability violated]";
    std::cout << "\n";
  }
  if (report.diagnostic) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", report.diagnostic->e_r);
    std::cout << "  diagnostic: E(r) = " << buf << " -> "
              << mudest::verdict_name(report.diagnostic->verdict) << "\n";
  }
  for (const auto& warning : report.warnings) {
    std::cout << "  warning: " << warning << "\n";
  }
  std::cout << "  elapsed: " << report.seconds << " s\n";
  if (report.config.write_files) {
    std::cout << "  report: " << report.config.out_dir << "/report.json\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mudest: parameter identification via maximal updated densities"};
  app.require_subcommand(1);
  // Let the shared flags (--seed, --out, ...) appear after the subcommand too.
  app.fallthrough();

  RunConfig config;
  std::string bandwidth = "scott";
  std::string format = "csv";
  std::vector<double> band;

  app.add_option("--seed", config.seed, "Seed for every random draw in the run")
      ->capture_default_str();
  app.add_option("--out", config.out_dir, "Directory for report.json and tables")
      ->capture_default_str();
  app.add_option("--format", format, "Table format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_flag("--strict", config.strict,
               "Exit with status 3 when the diagnostic verdict is SUSPECT");
  app.add_option("--diag-band", band,
                 "Lower and upper bound on E(r) for an OK verdict")
      ->expected(2);
  app.add_option("--bandwidth", bandwidth, "Kernel bandwidth rule: scott or silverman")
      ->check(CLI::IsMember({"scott", "silverman"}))
      ->capture_default_str();
  app.add_option("--variance-threshold", config.variance_threshold,
                 "Explained-variance fraction for component selection")
      ->check(CLI::Range(1e-12, 1.0))
      ->capture_default_str();
  app.add_option("--samples", config.sample_count,
                 "Ensemble size for generated experiments")
      ->check(CLI::PositiveNumber);
  app.add_option("--alphas", config.alphas,
                 "Initial-covariance scalings for the sensitivity runs");

  auto* lin = app.add_subcommand(
      "solve-linear", "Closed-form MUD/MAP/least-squares on a linear problem file");
  std::string problem_path;
  lin->add_option("--problem", problem_path, "JSON problem description")
      ->required()
      ->check(CLI::ExistingFile);

  auto* dens = app.add_subcommand(
      "solve-density", "Sample-based density update of an ensemble table");
  std::string ensemble_path;
  std::string observed_path;
  std::string initial_path;
  dens->add_option("--ensemble", ensemble_path, "Parameter/output table (csv or json)")
      ->required()
      ->check(CLI::ExistingFile);
  dens->add_option("--observed", observed_path, "Observed density spec (json)")
      ->required()
      ->check(CLI::ExistingFile);
  dens->add_option("--initial", initial_path,
                   "Initial density spec (default: kernel estimate on the samples)")
      ->check(CLI::ExistingFile);

  auto* wme = app.add_subcommand(
      "wme", "Weighted-mean-error pipeline: repeated measurements to a linear solve");
  std::string measurements_path;
  std::string data_path;
  std::string initial_gaussian_path;
  wme->add_option("--measurements", measurements_path, "Measurement-row matrix (json)")
      ->required()
      ->check(CLI::ExistingFile);
  wme->add_option("--data", data_path, "Observation table: device,index,value,sigma (csv)")
      ->required()
      ->check(CLI::ExistingFile);
  wme->add_option("--initial", initial_gaussian_path, "Initial Gaussian spec (json)")
      ->required()
      ->check(CLI::ExistingFile);

  auto* pca = app.add_subcommand(
      "pca", "Residual principal-component pipeline with diagnostic-driven selection");
  std::vector<int> candidates;
  pca->add_option("--ensemble", ensemble_path, "Parameter/output table (csv or json)")
      ->required()
      ->check(CLI::ExistingFile);
  pca->add_option("--data", data_path, "Observation table: device,index,value,sigma (csv)")
      ->required()
      ->check(CLI::ExistingFile);
  pca->add_option("--initial", initial_path,
                  "Initial density spec (default: kernel estimate on the samples)")
      ->check(CLI::ExistingFile);
  pca->add_option("--candidates", candidates,
                  "Component counts to score (default: 1..n* from the variance threshold)");

  auto* exp = app.add_subcommand("experiment", "Built-in reproducibility studies");
  std::string which;
  exp->add_option("name", which,
                  "illustrative | spectral | dimension | rank")
      ->required()
      ->check(CLI::IsMember({"illustrative", "spectral", "dimension", "rank"}));

  CLI11_PARSE(app, argc, argv);

  config.bandwidth = bandwidth == "silverman" ? mudest::BandwidthRule::Silverman
                                              : mudest::BandwidthRule::Scott;
  config.format = format == "json" ? mudest::TableFormat::Json : mudest::TableFormat::Csv;
  if (!band.empty()) {
    if (band[1] <= band[0]) {
      std::cerr << "error: --diag-band needs LO < HI\n";
      return 1;
    }
    config.band = mudest::DiagnosticBand{band[0], band[1]};
  }
  config.pca_candidates = candidates;

  try {
    RunReport report;
    if (lin->parsed()) {
      config.inputs["problem"] = problem_path;
      report = mudest::run_linear_gaussian(config);
    } else if (dens->parsed()) {
      config.inputs["ensemble"] = ensemble_path;
      config.inputs["observed"] = observed_path;
      if (!initial_path.empty()) config.inputs["initial"] = initial_path;
      report = mudest::run_density(config);
    } else if (wme->parsed()) {
      config.inputs["measurements"] = measurements_path;
      config.inputs["data"] = data_path;
      config.inputs["initial"] = initial_gaussian_path;
      report = mudest::run_wme(config);
    } else if (pca->parsed()) {
      config.inputs["ensemble"] = ensemble_path;
      config.inputs["data"] = data_path;
      if (!initial_path.empty()) config.inputs["initial"] = initial_path;
      report = mudest::run_pca_pipeline(config);
    } else if (exp->parsed()) {
      if (which == "illustrative") {
        report = mudest::experiment_illustrative(config);
      } else if (which == "spectral") {
        report = mudest::experiment_spectral_decay(config);
      } else if (which == "dimension") {
        report = mudest::experiment_dimension_sweep(config);
      } else {
        report = mudest::experiment_rank_sweep(config);
      }
    }
    print_summary(report);
    if (config.strict && report.diagnostic &&
        report.diagnostic->verdict == mudest::Verdict::Suspect) {
      std::cerr << "strict mode: diagnostic verdict SUSPECT\n";
      return 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
