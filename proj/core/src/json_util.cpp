#include "streamstat/json_util.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "streamstat/error.hpp"

namespace streamstat::json_util {

nlohmann::json from_double(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double to_double(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  fail(ErrorCode::CorruptSnapshot, "expected a number, got " + j.dump());
}

nlohmann::json from_vector(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(from_double(v(i)));
  return out;
}

Vector to_vector(const nlohmann::json& j) {
  if (!j.is_array()) fail(ErrorCode::CorruptSnapshot, "expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_double(j[i]);
  return v;
}

nlohmann::json from_matrix(const Matrix& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(from_vector(m.row(i).transpose()));
  return out;
}

Matrix to_matrix(const nlohmann::json& j) {
  if (!j.is_array()) fail(ErrorCode::CorruptSnapshot, "expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Vector r = to_vector(j[static_cast<std::size_t>(i)]);
    if (r.size() != cols) fail(ErrorCode::CorruptSnapshot, "ragged matrix");
    m.row(i) = r.transpose();
  }
  return m;
}

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  if (!j.is_object()) fail(ErrorCode::CorruptSnapshot, std::string("expected an object holding '") + key + "'");
  const auto it = j.find(key);
  if (it == j.end()) fail(ErrorCode::CorruptSnapshot, std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace streamstat::json_util
