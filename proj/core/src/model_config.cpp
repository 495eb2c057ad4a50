#include "streamstat/model_config.hpp"

#include <cstdint>
#include <cstdio>
#include <set>
#include <string_view>

#include "streamstat/error.hpp"

namespace streamstat::engine {

namespace {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const auto a : allowed) ok = ok || key == a;
    if (!ok) fail(ErrorCode::InvalidConfig, where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, where + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

ModelKind kind_from_string(const std::string& s) {
  if (s == "lm") return ModelKind::Lm;
  if (s == "cee") return ModelKind::Cee;
  if (s == "cuee") return ModelKind::Cuee;
  fail(ErrorCode::InvalidConfig, "kind must be lm, cee or cuee, got '" + s + "'");
}

std::string variance_name(ee::VarianceKind v) { return v == ee::VarianceKind::Robust ? "robust" : "model"; }

}  // namespace

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Lm:
      return "lm";
    case ModelKind::Cee:
      return "cee";
    case ModelKind::Cuee:
      return "cuee";
  }
  return "lm";
}

std::vector<std::string> ModelConfig::coefficient_names() const {
  std::vector<std::string> names;
  if (intercept) names.emplace_back("(intercept)");
  names.insert(names.end(), covariates.begin(), covariates.end());
  return names;
}

ee::Family ModelConfig::make_family() const {
  if (!family) fail(ErrorCode::InvalidConfig, "estimating-equation model needs a family");
  return ee::Family::from_name(*family);
}

ee::VarianceKind ModelConfig::effective_variance() const {
  return variance ? *variance : ee::default_variance(make_family());
}

ModelConfig parse_model_config(const json& j) {
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, "model config must be a JSON object");
  reject_unknown(j, {"kind", "family", "formula", "chunk_size", "ridge_lambda", "diagnostics", "ginv", "irls", "variance"},
                 "config");
  ModelConfig c;
  c.kind = kind_from_string(get<std::string>(j, "kind", "config"));

  const json& formula = j.contains("formula") ? j["formula"] : json();
  if (!formula.is_object()) fail(ErrorCode::InvalidConfig, "config.formula is required");
  reject_unknown(formula, {"response", "covariates", "intercept"}, "formula");
  c.response = get<std::string>(formula, "response", "formula");
  c.covariates = get<std::vector<std::string>>(formula, "covariates", "formula");
  c.intercept = get_or<bool>(formula, "intercept", true, "formula");
  if (c.p() == 0) fail(ErrorCode::InvalidConfig, "model has no coefficients");
  std::set<std::string> seen(c.covariates.begin(), c.covariates.end());
  if (seen.size() != c.covariates.size() || seen.count(c.response) != 0) {
    fail(ErrorCode::InvalidConfig, "formula columns must be distinct");
  }

  const auto chunk = get_or<long long>(j, "chunk_size", 1000, "config");
  if (chunk < 1) fail(ErrorCode::InvalidConfig, "chunk_size must be >= 1");
  c.chunk_size = static_cast<std::size_t>(chunk);

  if (j.contains("ridge_lambda") && !j["ridge_lambda"].is_null()) {
    if (c.kind != ModelKind::Lm) fail(ErrorCode::InvalidConfig, "ridge_lambda applies to lm models only");
    const double lambda = get<double>(j, "ridge_lambda", "config");
    if (!(lambda > 0.0)) fail(ErrorCode::NonPositiveLambda, "ridge_lambda must be > 0");
    c.ridge_lambda = lambda;
  }

  if (j.contains("diagnostics")) {
    const json& d = j["diagnostics"];
    reject_unknown(d, {"t_test", "fdr_alpha", "normal_f", "asymptotic_f", "m", "alpha"}, "diagnostics");
    c.diagnostics.t_test = get_or<bool>(d, "t_test", false, "diagnostics");
    c.diagnostics.fdr_alpha = get_or<double>(d, "fdr_alpha", 0.10, "diagnostics");
    c.diagnostics.normal_f = get_or<bool>(d, "normal_f", false, "diagnostics");
    c.diagnostics.asymptotic_f = get_or<bool>(d, "asymptotic_f", false, "diagnostics");
    const auto m = get_or<long long>(d, "m", 2, "diagnostics");
    c.diagnostics.alpha = get_or<double>(d, "alpha", 0.05, "diagnostics");
    if (!(c.diagnostics.fdr_alpha > 0.0 && c.diagnostics.fdr_alpha < 1.0)) {
      fail(ErrorCode::InvalidConfig, "diagnostics.fdr_alpha must lie in (0, 1)");
    }
    if (!(c.diagnostics.alpha > 0.0 && c.diagnostics.alpha < 1.0)) {
      fail(ErrorCode::InvalidConfig, "diagnostics.alpha must lie in (0, 1)");
    }
    if (m < 1) fail(ErrorCode::InvalidConfig, "diagnostics.m must be >= 1");
    c.diagnostics.m = static_cast<std::size_t>(m);
    const bool any = c.diagnostics.t_test || c.diagnostics.normal_f || c.diagnostics.asymptotic_f;
    if (any && c.kind != ModelKind::Lm) fail(ErrorCode::InvalidConfig, "diagnostics apply to lm models only");
  }

  if (j.contains("ginv")) c.ginv = numkern::ginv_kind_from_string(get<std::string>(j, "ginv", "config"));

  if (c.kind != ModelKind::Lm) {
    if (!j.contains("family")) fail(ErrorCode::InvalidConfig, "cee/cuee models need a family");
    c.family = get<std::string>(j, "family", "config");
    c.make_family();  // validates the name
  } else if (j.contains("family") && get<std::string>(j, "family", "config") != "gaussian") {
    fail(ErrorCode::InvalidConfig, "lm models take no family other than gaussian");
  }

  if (j.contains("irls")) {
    const json& r = j["irls"];
    reject_unknown(r, {"tol", "max_iter", "warm_start"}, "irls");
    c.irls.tol = get_or<double>(r, "tol", 1e-8, "irls");
    c.irls.max_iter = get_or<int>(r, "max_iter", 50, "irls");
    c.irls.warm_start = get_or<bool>(r, "warm_start", false, "irls");
    if (!(c.irls.tol > 0.0) || c.irls.max_iter < 1) fail(ErrorCode::InvalidConfig, "irls needs tol > 0, max_iter >= 1");
  }
  c.irls.ginv = c.ginv;

  if (j.contains("variance")) {
    const auto v = get<std::string>(j, "variance", "config");
    if (v == "robust") {
      c.variance = ee::VarianceKind::Robust;
    } else if (v == "model") {
      c.variance = ee::VarianceKind::ModelBased;
    } else {
      fail(ErrorCode::InvalidConfig, "variance must be 'robust' or 'model'");
    }
  }
  return c;
}

json to_json(const ModelConfig& c) {
  json j{{"kind", to_string(c.kind)},
         {"formula", {{"response", c.response}, {"covariates", c.covariates}, {"intercept", c.intercept}}},
         {"chunk_size", c.chunk_size},
         {"diagnostics",
          {{"t_test", c.diagnostics.t_test},
           {"fdr_alpha", c.diagnostics.fdr_alpha},
           {"normal_f", c.diagnostics.normal_f},
           {"asymptotic_f", c.diagnostics.asymptotic_f},
           {"m", c.diagnostics.m},
           {"alpha", c.diagnostics.alpha}}},
         {"ginv", std::string(numkern::to_string(c.ginv))},
         {"irls", {{"tol", c.irls.tol}, {"max_iter", c.irls.max_iter}, {"warm_start", c.irls.warm_start}}}};
  if (c.family) j["family"] = *c.family;
  if (c.ridge_lambda) j["ridge_lambda"] = *c.ridge_lambda;
  if (c.variance) j["variance"] = variance_name(*c.variance);
  return j;
}

std::string config_hash(const ModelConfig& c) { return hex(fnv1a(to_json(c).dump())); }

std::string schema_fingerprint(const ModelConfig& c) {
  std::string s = c.response + "|";
  for (const auto& cov : c.covariates) s += cov + ",";
  s += c.intercept ? "|1" : "|0";
  return hex(fnv1a(s));
}

}  // namespace streamstat::engine
