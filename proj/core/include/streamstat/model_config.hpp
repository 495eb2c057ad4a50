#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "streamstat/ee_stream.hpp"

namespace streamstat::engine {

enum class ModelKind { Lm, Cee, Cuee };

struct DiagnosticsConfig {
  bool t_test = false;
  double fdr_alpha = 0.10;
  bool normal_f = false;
  bool asymptotic_f = false;
  std::size_t m = 2;
  double alpha = 0.05;  // level at which a global test marks a chunk
};

struct ModelConfig {
  ModelKind kind = ModelKind::Lm;
  std::optional<std::string> family;
  std::string response;
  std::vector<std::string> covariates;
  bool intercept = true;
  std::size_t chunk_size = 1000;
  std::optional<double> ridge_lambda;
  DiagnosticsConfig diagnostics;
  numkern::GinvKind ginv = numkern::GinvKind::MoorePenrose;
  ee::IrlsConfig irls;
  std::optional<ee::VarianceKind> variance;

  std::size_t p() const { return covariates.size() + (intercept ? 1 : 0); }
  std::vector<std::string> coefficient_names() const;
  ee::Family make_family() const;
  ee::VarianceKind effective_variance() const;
};

/// Throws InvalidConfig on unknown keys, missing fields or out-of-range values.
ModelConfig parse_model_config(const nlohmann::json& j);
nlohmann::json to_json(const ModelConfig& c);

/// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
std::string config_hash(const ModelConfig& c);
/// FNV-1a 64 over the response and covariate names and the intercept flag.
std::string schema_fingerprint(const ModelConfig& c);

std::string to_string(ModelKind k);

}  // namespace streamstat::engine
