#pragma once

// JSON encoding of the cumulative states. Parsing throws CorruptSnapshot.

#include <nlohmann/json.hpp>

#include "streamstat/ee_stream.hpp"
#include "streamstat/lm_stream.hpp"

namespace streamstat::snapshot {

nlohmann::json to_json(const lm::LmState& s);
lm::LmState lm_state_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ee::CeeState& s);
ee::CeeState cee_state_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ee::CueeState& s);
ee::CueeState cuee_state_from_json(const nlohmann::json& j);

}  // namespace streamstat::snapshot
