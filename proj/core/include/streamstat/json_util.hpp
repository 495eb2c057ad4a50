#pragma once

// JSON encoding of doubles, vectors and matrices. Finite doubles use
// nlohmann's shortest round-trip form; non-finite values become strings.

#include <nlohmann/json.hpp>

#include "streamstat/numkern.hpp"

namespace streamstat::json_util {

nlohmann::json from_double(double v);
/// Throws CorruptSnapshot on anything that is not a number or a non-finite tag.
double to_double(const nlohmann::json& j);

nlohmann::json from_vector(const Vector& v);
Vector to_vector(const nlohmann::json& j);

/// Row-major array of arrays.
nlohmann::json from_matrix(const Matrix& m);
Matrix to_matrix(const nlohmann::json& j);

/// Looks up a required member; throws CorruptSnapshot when absent.
const nlohmann::json& field(const nlohmann::json& j, const char* key);

}  // namespace streamstat::json_util
