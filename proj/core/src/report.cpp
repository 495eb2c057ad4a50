#include "streamstat/report.hpp"

#include <cstdio>
#include <sstream>

#include "streamstat/error.hpp"
#include "streamstat/json_util.hpp"

namespace streamstat::report {

namespace {

using nlohmann::json;
using json_util::from_double;

bool is_lm(const engine::StreamEngine& eng) { return eng.config().kind == engine::ModelKind::Lm; }

json header(const engine::StreamEngine& eng, ReportKind kind) {
  return json{{"what", to_string(kind)},
              {"model", engine::to_string(eng.config().kind)},
              {"n", eng.rows_consumed() - eng.pending_rows()},
              {"singular", eng.singular()}};
}

// EE estimate and variance, whichever estimator the engine runs.
std::pair<Vector, Matrix> ee_estimate(const engine::StreamEngine& eng) {
  if (const auto* s = std::get_if<ee::CeeState>(&eng.state())) return {s->beta, s->v};
  const auto& s = std::get<ee::CueeState>(eng.state());
  return {s.beta_tilde, s.v_tilde};
}

json coef(const engine::StreamEngine& eng) {
  json out = header(eng, ReportKind::Coef);
  const auto names = eng.config().coefficient_names();
  const char* stat = is_lm(eng) ? "t" : "z";
  out["columns"] = {"estimate", "se", stat, "p_value"};
  out["rows"] = json::array();
  if (eng.singular()) {
    out["status"] = "singular";
    return out;
  }
  auto emit = [&](std::size_t j, double est, double se, double z, double p) {
    out["rows"].push_back(json{{"name", names[j]},
                               {"estimate", from_double(est)},
                               {"se", from_double(se)},
                               {stat, from_double(z)},
                               {"p_value", from_double(p)}});
  };
  if (is_lm(eng)) {
    const auto& st = std::get<lm::LmState>(eng.state());
    if (!(st.residual_df() > 0.0)) {
      out["status"] = "insufficient data";
      return out;
    }
    const auto tests = lm::coef_t_tests(st);
    for (std::size_t j = 0; j < tests.size(); ++j) emit(j, tests[j].estimate, tests[j].se, tests[j].t, tests[j].p_value);
  } else {
    const auto [beta, v] = ee_estimate(eng);
    const auto tests = ee::wald_coef_tests(beta, v);
    for (std::size_t j = 0; j < tests.size(); ++j) emit(j, tests[j].estimate, tests[j].se, tests[j].z, tests[j].p_value);
  }
  out["status"] = "ok";
  return out;
}

json anova(const engine::StreamEngine& eng) {
  if (!is_lm(eng)) fail(ErrorCode::InvalidConfig, "anova applies to lm models only");
  json out = header(eng, ReportKind::Anova);
  out["columns"] = {"df", "ss", "ms", "f", "p_value"};
  out["rows"] = json::array();
  const auto& st = std::get<lm::LmState>(eng.state());
  if (eng.singular() || st.n_total <= st.p) {
    out["status"] = "insufficient data";
    out["rows"].push_back(json{{"source", "insufficient data"}});
    return out;
  }
  const lm::AnovaTable t = lm::anova(st);
  out["rows"].push_back(json{{"source", "regression"},
                             {"df", from_double(t.df_regression)},
                             {"ss", from_double(t.ssr)},
                             {"ms", from_double(t.msr)},
                             {"f", from_double(t.f_stat)},
                             {"p_value", from_double(t.p_value)}});
  out["rows"].push_back(json{
      {"source", "error"}, {"df", from_double(t.df_error)}, {"ss", from_double(t.sse)}, {"ms", from_double(t.mse)}});
  out["rows"].push_back(json{{"source", "total"}, {"df", from_double(t.df_total)}, {"ss", from_double(t.sst)}});
  out["r_squared"] = from_double(t.r_squared);
  out["degenerate"] = t.degenerate;
  out["status"] = "ok";
  return out;
}

json wald(const engine::StreamEngine& eng, const std::optional<Matrix>& contrast) {
  json out = header(eng, ReportKind::Wald);
  const Matrix c = contrast ? *contrast : default_contrast(eng.config());
  out["contrast"] = json_util::from_matrix(c);
  if (eng.singular()) {
    out["status"] = "singular";
    return out;
  }
  if (is_lm(eng)) {
    const lm::FTest f = lm::glh_f_test(std::get<lm::LmState>(eng.state()), c);
    out["test"] = "F";
    out["statistic"] = from_double(f.f_stat);
    out["df1"] = from_double(f.df1);
    out["df2"] = from_double(f.df2);
    out["p_value"] = from_double(f.p_value);
  } else {
    const auto [beta, v] = ee_estimate(eng);
    const ee::WaldTest w = ee::wald_test(beta, v, c);
    out["test"] = "chi2";
    out["statistic"] = from_double(w.w);
    out["df1"] = w.df;
    out["p_value"] = from_double(w.p_value);
  }
  out["status"] = "ok";
  return out;
}

json diag_view(const engine::StreamEngine& eng) {
  json out = header(eng, ReportKind::Diag);
  const double alpha = eng.config().diagnostics.alpha;
  out["alpha"] = from_double(alpha);
  out["chunks"] = json::array();
  for (const auto& r : eng.diagnostics()) {
    json j = diag::to_json(r);
    const bool flagged = (r.normal_f && r.normal_f->p_value <= alpha) ||
                         (r.asymptotic_f && r.asymptotic_f->p_value <= alpha);
    j["flagged"] = flagged;
    out["chunks"].push_back(std::move(j));
  }
  out["warnings"] = eng.warnings();
  out["status"] = "ok";
  return out;
}

std::string num(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_unsigned()) return std::to_string(j.get<std::uint64_t>());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", j.get<double>());
  return buf;
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' '); }

void table(std::ostringstream& o, const json& rows, const json& columns, const char* key) {
  o << pad("", 20);
  for (const auto& c : columns) o << pad(c.get<std::string>(), 18);
  o << '\n';
  for (const auto& r : rows) {
    o << pad(r.at(key).get<std::string>(), 20);
    for (const auto& c : columns) o << pad(r.contains(c.get<std::string>()) ? num(r[c.get<std::string>()]) : "", 18);
    o << '\n';
  }
}

}  // namespace

std::string to_string(ReportKind k) {
  switch (k) {
    case ReportKind::Coef:
      return "coef";
    case ReportKind::Anova:
      return "anova";
    case ReportKind::Wald:
      return "wald";
    case ReportKind::Diag:
      return "diag";
  }
  return "coef";
}

ReportKind report_kind_from_string(const std::string& s) {
  if (s == "coef") return ReportKind::Coef;
  if (s == "anova") return ReportKind::Anova;
  if (s == "wald") return ReportKind::Wald;
  if (s == "diag") return ReportKind::Diag;
  fail(ErrorCode::InvalidConfig, "report must be coef, anova, wald or diag, got '" + s + "'");
}

Matrix default_contrast(const engine::ModelConfig& config) {
  const auto p = static_cast<Eigen::Index>(config.p());
  const Eigen::Index off = config.intercept ? 1 : 0;
  Matrix c = Matrix::Zero(p - off, p);
  for (Eigen::Index i = 0; i < p - off; ++i) c(i, i + off) = 1.0;
  return c;
}

Matrix contrast_from_json(const nlohmann::json& j, std::size_t p) {
  if (!j.is_array() || j.empty()) fail(ErrorCode::InvalidConfig, "contrast must be a non-empty array of rows");
  Matrix c;
  try {
    c = json_util::to_matrix(j);
  } catch (const Error& e) {
    fail(ErrorCode::InvalidConfig, std::string("contrast: ") + e.what());
  }
  if (static_cast<std::size_t>(c.cols()) != p) {
    fail(ErrorCode::DimensionMismatch, "contrast has " + std::to_string(c.cols()) + " columns, model has " +
                                           std::to_string(p));
  }
  return c;
}

nlohmann::json build(const engine::StreamEngine& eng, ReportKind kind, const std::optional<Matrix>& contrast) {
  switch (kind) {
    case ReportKind::Coef:
      return coef(eng);
    case ReportKind::Anova:
      return anova(eng);
    case ReportKind::Wald:
      return wald(eng, contrast);
    case ReportKind::Diag:
      return diag_view(eng);
  }
  return coef(eng);
}

std::string render_text(const nlohmann::json& r) {
  std::ostringstream o;
  const std::string what = r.at("what").get<std::string>();
  o << what << " (" << r.at("model").get<std::string>() << ", n = " << num(r.at("n")) << ")\n";
  if (r.value("singular", false)) o << "warning: cumulative information is singular; estimates unavailable\n";
  const std::string status = r.value("status", "ok");
  if (what == "coef") {
    if (status != "ok") {
      o << status << '\n';
    } else {
      table(o, r.at("rows"), r.at("columns"), "name");
    }
  } else if (what == "anova") {
    table(o, r.at("rows"), r.at("columns"), "source");
    if (r.contains("r_squared")) o << "R^2 = " << num(r["r_squared"]) << '\n';
  } else if (what == "wald") {
    if (status != "ok") {
      o << status << '\n';
    } else {
      o << r.at("test").get<std::string>() << " = " << num(r.at("statistic")) << ", df = " << num(r.at("df1"));
      if (r.contains("df2")) o << ", " << num(r["df2"]);
      o << ", p = " << num(r.at("p_value")) << '\n';
    }
  } else {
    for (const auto& c : r.at("chunks")) {
      o << "chunk " << num(c.at("chunk")) << (c.value("flagged", false) ? "  FLAGGED" : "") << '\n';
      for (const char* key : {"normal_f", "asymptotic_f"}) {
        const json& g = c.at("global").at(key);
        if (g.is_null()) continue;
        o << "  " << key << ": F = " << num(g.at("statistic")) << ", df = (" << num(g.at("df1")) << ", "
          << num(g.at("df2")) << "), p = " << num(g.at("p_value")) << '\n';
      }
      for (const auto& obs : c.at("observations")) {
        o << "  row " << num(obs.at("index")) << ": t = " << num(obs.at("t_check")) << ", p_adj = "
          << num(obs.at("p_adj")) << '\n';
      }
    }
    for (const auto& w : r.at("warnings")) o << "warning: " << w.get<std::string>() << '\n';
  }
  return o.str();
}

}  // namespace streamstat::report
