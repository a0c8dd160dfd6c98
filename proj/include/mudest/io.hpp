#pragma once

#include "mudest/density.hpp"
#include "mudest/linear_gaussian.hpp"
#include "mudest/qoi_maps.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mudest {

inline constexpr const char* kSchemaVersion = "1";

enum class TableFormat { Csv, Json };

/// Ensemble table: parameter columns lam_1..lam_p, QoI columns q_1..q_m and
/// an optional weight column. CSV files open with the comment line
/// `# schema_version=1`; JSON files carry a schema_version field.
struct EnsembleFile {
  Matrix params;
  Matrix qoi;
  Vector weights;  // size 0 when the file has no weights
};

EnsembleFile read_ensemble(const std::string& path);  // format from extension
EnsembleFile read_ensemble_csv(const std::string& path);
EnsembleFile read_ensemble_json(const std::string& path);
void write_ensemble(const std::string& path, const Matrix& params, const Matrix& qoi,
                    const Vector& weights, TableFormat format);

/// Long-format observation table with columns device,index,value,sigma.
/// Devices keep file order (first appearance); repeats sort by index. Sigma
/// must be constant within a device.
MeasurementData read_measurement_csv(const std::string& path);

/// Density specs: {"type": "gaussian", "mean": [...], "covariance": [[...]]},
/// {"type": "uniform", "lo": [...], "hi": [...]},
/// {"type": "std_normal", "dim": k}.
std::shared_ptr<const Density> density_from_json(const nlohmann::json& spec);
std::shared_ptr<const Density> read_density(const std::string& path);

GaussianDensity gaussian_from_json(const nlohmann::json& spec);

struct LinearProblemFile {
  LinearGaussianProblem problem;
  std::optional<Vector> reference;
  std::vector<double> alphas;  // empty: caller decides
};

/// JSON with "matrix", optional "bias" (default zero), "initial" and
/// "observed" Gaussian specs, optional "reference" and "alphas".
LinearProblemFile read_linear_problem(const std::string& path);

/// Measurement-set matrix (rows are measurement functionals) from JSON
/// {"rows": [[...]]}.
LinearMeasurementSet read_measurement_set(const std::string& path);

/// Writes named columns with the schema comment line; one row per matrix row.
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Matrix& rows);
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows);

/// Gaussian spec file: {"mean": [...], "covariance": [[...]]}.
GaussianDensity read_gaussian(const std::string& path);

nlohmann::json vector_to_json(const Vector& v);
nlohmann::json matrix_to_json(const Matrix& m);
Vector vector_from_json(const nlohmann::json& j, const std::string& what);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& what);

/// Round-trip-safe decimal rendering used by every CSV writer.
std::string format_double(double value);

}  // namespace mudest
