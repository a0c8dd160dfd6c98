#include "mudest/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace mudest {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_double(const std::string& cell, long row, const std::string& column,
                    const std::string& path) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw std::runtime_error(path + ": row " + std::to_string(row) + ", column '" + column +
                             "': cannot parse '" + cell + "'");
  }
  if (!std::isfinite(value)) {
    throw std::runtime_error(path + ": row " + std::to_string(row) + ", column '" + column +
                             "': non-finite value");
  }
  return value;
}

long parse_long(const std::string& cell, long row, const std::string& column,
                const std::string& path) {
  long value = 0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw std::runtime_error(path + ": row " + std::to_string(row) + ", column '" + column +
                             "': cannot parse integer '" + cell + "'");
  }
  return value;
}

/// Content lines of a CSV file: comments (#) and blank lines dropped,
/// original 1-based line numbers kept for error messages.
std::vector<std::pair<long, std::string>> csv_content_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::vector<std::pair<long, std::string>> lines;
  std::string line;
  long number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    lines.emplace_back(number, line);
  }
  return lines;
}

int suffix_index(const std::string& header, const std::string& prefix) {
  if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0) {
    return -1;
  }
  int idx = 0;
  const char* b = header.data() + prefix.size();
  const char* e = header.data() + header.size();
  const auto res = std::from_chars(b, e, idx);
  if (res.ec != std::errc() || res.ptr != e || idx < 1) return -1;
  return idx;
}

void require_contiguous(const std::vector<int>& positions, const std::string& prefix,
                        const std::string& path) {
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] < 0) {
      throw std::runtime_error(path + ": missing column " + prefix + std::to_string(i + 1));
    }
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

EnsembleFile read_ensemble_csv(const std::string& path) {
  const auto lines = csv_content_lines(path);
  if (lines.empty()) {
    throw std::runtime_error(path + ": no header row");
  }
  const std::vector<std::string> header = split_csv_line(lines.front().second);

  int p = 0;
  int m = 0;
  for (const std::string& h : header) {
    p = std::max(p, suffix_index(h, "lam_"));
    m = std::max(m, suffix_index(h, "q_"));
  }
  if (p == 0) throw std::runtime_error(path + ": no lam_* columns");
  if (m == 0) throw std::runtime_error(path + ": no q_* columns");

  std::vector<int> lam_pos(static_cast<std::size_t>(p), -1);
  std::vector<int> q_pos(static_cast<std::size_t>(m), -1);
  int weight_pos = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const int li = suffix_index(header[c], "lam_");
    const int qi = suffix_index(header[c], "q_");
    if (li > 0) lam_pos[static_cast<std::size_t>(li - 1)] = static_cast<int>(c);
    else if (qi > 0) q_pos[static_cast<std::size_t>(qi - 1)] = static_cast<int>(c);
    else if (header[c] == "weight") weight_pos = static_cast<int>(c);
    else throw std::runtime_error(path + ": unknown column '" + header[c] + "'");
  }
  require_contiguous(lam_pos, "lam_", path);
  require_contiguous(q_pos, "q_", path);

  const Eigen::Index rows = static_cast<Eigen::Index>(lines.size()) - 1;
  if (rows < 1) throw std::runtime_error(path + ": no data rows");

  EnsembleFile out;
  out.params.resize(rows, p);
  out.qoi.resize(rows, m);
  if (weight_pos >= 0) out.weights.resize(rows);

  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& [line_no, text] = lines[static_cast<std::size_t>(r) + 1];
    const std::vector<std::string> cells = split_csv_line(text);
    if (cells.size() != header.size()) {
      throw std::runtime_error(path + ": row " + std::to_string(line_no) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
    }
    for (int j = 0; j < p; ++j) {
      const std::size_t c = static_cast<std::size_t>(lam_pos[static_cast<std::size_t>(j)]);
      out.params(r, j) = parse_double(cells[c], line_no, header[c], path);
    }
    for (int j = 0; j < m; ++j) {
      const std::size_t c = static_cast<std::size_t>(q_pos[static_cast<std::size_t>(j)]);
      out.qoi(r, j) = parse_double(cells[c], line_no, header[c], path);
    }
    if (weight_pos >= 0) {
      const std::size_t c = static_cast<std::size_t>(weight_pos);
      out.weights(r) = parse_double(cells[c], line_no, header[c], path);
    }
  }
  return out;
}

EnsembleFile read_ensemble_json(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  EnsembleFile out;
  out.params = matrix_from_json(j.at("params"), path + ":params");
  out.qoi = matrix_from_json(j.at("qoi"), path + ":qoi");
  if (j.contains("weights")) {
    out.weights = vector_from_json(j.at("weights"), path + ":weights");
  }
  if (out.qoi.rows() != out.params.rows()) {
    throw std::runtime_error(path + ": params and qoi row counts differ");
  }
  if (out.weights.size() != 0 && out.weights.size() != out.params.rows()) {
    throw std::runtime_error(path + ": weights length differs from row count");
  }
  return out;
}

EnsembleFile read_ensemble(const std::string& path) {
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
    return read_ensemble_json(path);
  }
  return read_ensemble_csv(path);
}

void write_ensemble(const std::string& path, const Matrix& params, const Matrix& qoi,
                    const Vector& weights, TableFormat format) {
  if (params.rows() != qoi.rows()) {
    throw std::invalid_argument("write_ensemble: params and qoi row counts differ");
  }
  const std::filesystem::path fspath(path);
  if (fspath.has_parent_path()) {
    std::filesystem::create_directories(fspath.parent_path());
  }
  if (format == TableFormat::Json) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["params"] = matrix_to_json(params);
    j["qoi"] = matrix_to_json(qoi);
    if (weights.size() != 0) j["weights"] = vector_to_json(weights);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# schema_version=" << kSchemaVersion << '\n';
  for (Eigen::Index j = 0; j < params.cols(); ++j) {
    out << (j == 0 ? "" : ",") << "lam_" << (j + 1);
  }
  for (Eigen::Index j = 0; j < qoi.cols(); ++j) out << ",q_" << (j + 1);
  if (weights.size() != 0) out << ",weight";
  out << '\n';
  for (Eigen::Index r = 0; r < params.rows(); ++r) {
    for (Eigen::Index j = 0; j < params.cols(); ++j) {
      out << (j == 0 ? "" : ",") << format_double(params(r, j));
    }
    for (Eigen::Index j = 0; j < qoi.cols(); ++j) out << ',' << format_double(qoi(r, j));
    if (weights.size() != 0) out << ',' << format_double(weights(r));
    out << '\n';
  }
}

MeasurementData read_measurement_csv(const std::string& path) {
  const auto lines = csv_content_lines(path);
  if (lines.empty()) {
    throw std::runtime_error(path + ": no header row");
  }
  const std::vector<std::string> header = split_csv_line(lines.front().second);
  const std::vector<std::string> expected{"device", "index", "value", "sigma"};
  if (header != expected) {
    throw std::runtime_error(path + ": header must be device,index,value,sigma");
  }

  struct Entry {
    long index;
    double value;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Entry>> entries;
  std::map<std::string, double> sigmas;

  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& [line_no, text] = lines[r];
    const std::vector<std::string> cells = split_csv_line(text);
    if (cells.size() != 4) {
      throw std::runtime_error(path + ": row " + std::to_string(line_no) +
                               " must have 4 cells");
    }
    const std::string& device = cells[0];
    if (device.empty()) {
      throw std::runtime_error(path + ": row " + std::to_string(line_no) + ": empty device id");
    }
    const long index = parse_long(cells[1], line_no, "index", path);
    const double value = parse_double(cells[2], line_no, "value", path);
    const double sigma = parse_double(cells[3], line_no, "sigma", path);
    if (!(sigma > 0.0)) {
      throw std::runtime_error(path + ": row " + std::to_string(line_no) +
                               ": sigma must be positive");
    }
    auto [it, inserted] = entries.try_emplace(device);
    if (inserted) {
      order.push_back(device);
      sigmas[device] = sigma;
    } else if (sigmas[device] != sigma) {
      throw std::runtime_error(path + ": device '" + device +
                               "' has inconsistent sigma values");
    }
    for (const Entry& e : it->second) {
      if (e.index == index) {
        throw std::runtime_error(path + ": device '" + device + "' repeats index " +
                                 std::to_string(index));
      }
    }
    it->second.push_back(Entry{index, value});
  }
  if (order.empty()) {
    throw std::runtime_error(path + ": no observation rows");
  }

  std::vector<DeviceData> devices;
  devices.reserve(order.size());
  for (const std::string& device : order) {
    auto& list = entries[device];
    std::sort(list.begin(), list.end(),
              [](const Entry& a, const Entry& b) { return a.index < b.index; });
    DeviceData dev;
    dev.sigma = sigmas[device];
    dev.values.reserve(list.size());
    for (const Entry& e : list) dev.values.push_back(e.value);
    devices.push_back(std::move(dev));
  }
  return MeasurementData(std::move(devices));
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
  return j;
}

Vector vector_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) {
    throw std::runtime_error(what + ": expected a non-empty array");
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw std::runtime_error(what + ": entry " + std::to_string(i) + " is not a number");
    }
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    if (!std::isfinite(v(static_cast<Eigen::Index>(i)))) {
      throw std::runtime_error(what + ": entry " + std::to_string(i) + " is non-finite");
    }
  }
  return v;
}

Matrix matrix_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) {
    throw std::runtime_error(what + ": expected a non-empty array of rows");
  }
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) {
    throw std::runtime_error(what + ": rows must be non-empty arrays");
  }
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw std::runtime_error(what + ": row " + std::to_string(r) + " has the wrong length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) {
        throw std::runtime_error(what + ": entry (" + std::to_string(r) + "," +
                                 std::to_string(c) + ") is not a number");
      }
      const double value = j[r][c].get<double>();
      if (!std::isfinite(value)) {
        throw std::runtime_error(what + ": entry (" + std::to_string(r) + "," +
                                 std::to_string(c) + ") is non-finite");
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = value;
    }
  }
  return m;
}

GaussianDensity gaussian_from_json(const nlohmann::json& spec) {
  return GaussianDensity(vector_from_json(spec.at("mean"), "mean"),
                         matrix_from_json(spec.at("covariance"), "covariance"));
}

std::shared_ptr<const Density> density_from_json(const nlohmann::json& spec) {
  if (!spec.is_object()) {
    throw std::runtime_error("density spec must be a JSON object with a 'type' field");
  }
  const std::string type = spec.at("type").get<std::string>();
  if (type == "gaussian") {
    return std::make_shared<GaussianPdf>(gaussian_from_json(spec));
  }
  if (type == "uniform") {
    return std::make_shared<UniformBoxPdf>(vector_from_json(spec.at("lo"), "lo"),
                                           vector_from_json(spec.at("hi"), "hi"));
  }
  if (type == "std_normal") {
    return std::make_shared<StdNormalPdf>(spec.at("dim").get<Eigen::Index>());
  }
  throw std::runtime_error("unknown density type '" + type + "'");
}

std::shared_ptr<const Density> read_density(const std::string& path) {
  try {
    return density_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

LinearProblemFile read_linear_problem(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  const Matrix a = matrix_from_json(j.at("matrix"), path + ":matrix");
  Vector b = Vector::Zero(a.rows());
  if (j.contains("bias")) {
    b = vector_from_json(j.at("bias"), path + ":bias");
  }
  LinearProblemFile out{
      LinearGaussianProblem(AffineMap(a, b), gaussian_from_json(j.at("initial")),
                            gaussian_from_json(j.at("observed"))),
      std::nullopt,
      {}};
  if (j.contains("reference")) {
    out.reference = vector_from_json(j.at("reference"), path + ":reference");
    if (out.reference->size() != out.problem.param_dim()) {
      throw std::runtime_error(path + ": reference length differs from the parameter count");
    }
  }
  if (j.contains("alphas")) {
    for (const auto& v : j.at("alphas")) {
      if (!v.is_number() || !(v.get<double>() > 0.0)) {
        throw std::runtime_error(path + ": alphas must be positive numbers");
      }
      out.alphas.push_back(v.get<double>());
    }
  }
  return out;
}

LinearMeasurementSet read_measurement_set(const std::string& path) {
  try {
    const nlohmann::json j = nlohmann::json::parse(read_file(path));
    return LinearMeasurementSet(matrix_from_json(j.at("rows"), path + ":rows"));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

GaussianDensity read_gaussian(const std::string& path) {
  try {
    return gaussian_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows) {
  const std::filesystem::path fspath(path);
  if (fspath.has_parent_path()) {
    std::filesystem::create_directories(fspath.parent_path());
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# schema_version=" << kSchemaVersion << '\n';
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out << (c == 0 ? "" : ",") << columns[c];
  }
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != columns.size()) {
      throw std::invalid_argument("write_csv: row width mismatch");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << (c == 0 ? "" : ",") << row[c];
    }
    out << '\n';
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Matrix& rows) {
  if (static_cast<Eigen::Index>(columns.size()) != rows.cols()) {
    throw std::invalid_argument("write_csv: column count mismatch");
  }
  const std::filesystem::path fspath(path);
  if (fspath.has_parent_path()) {
    std::filesystem::create_directories(fspath.parent_path());
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# schema_version=" << kSchemaVersion << '\n';
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out << (c == 0 ? "" : ",") << columns[c];
  }
  out << '\n';
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      out << (c == 0 ? "" : ",") << format_double(rows(r, c));
    }
    out << '\n';
  }
}

}  // namespace mudest
