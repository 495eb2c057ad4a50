#pragma once

// Report views over an engine: every number is the library call's output,
// carried as JSON and rendered as a text table.

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "streamstat/engine.hpp"

namespace streamstat::report {

enum class ReportKind { Coef, Anova, Wald, Diag };

std::string to_string(ReportKind k);
/// Throws InvalidConfig unless s is coef, anova, wald or diag.
ReportKind report_kind_from_string(const std::string& s);

/// H0: every coefficient except the intercept is zero.
Matrix default_contrast(const engine::ModelConfig& config);

/// Contrast rows as a JSON array of arrays with p columns.
Matrix contrast_from_json(const nlohmann::json& j, std::size_t p);

/// Coef: estimate/se/t (or z)/p per coefficient. Anova: LM only, with an
/// "insufficient data" row when N <= p. Wald: LM F test or EE chi-square
/// test of C beta = 0. Diag: the stored per-chunk diagnostics.
nlohmann::json build(const engine::StreamEngine& eng, ReportKind kind,
                     const std::optional<Matrix>& contrast = std::nullopt);

std::string render_text(const nlohmann::json& report);

}  // namespace streamstat::report
