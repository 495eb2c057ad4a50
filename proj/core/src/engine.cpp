#include "streamstat/engine.hpp"

#include <string>
#include <utility>

#include "streamstat/error.hpp"
#include "streamstat/json_util.hpp"
#include "streamstat/snapshot.hpp"

namespace streamstat::engine {

namespace {

constexpr const char* kFormat = "streamstat-snapshot";
constexpr int kVersion = 1;

EngineState initial_state(const ModelConfig& c) {
  switch (c.kind) {
    case ModelKind::Lm:
      return c.ridge_lambda ? lm::lm_init_ridge(c.p(), *c.ridge_lambda) : lm::LmState::empty(c.p());
    case ModelKind::Cee:
      return ee::CeeState::empty(c.p());
    case ModelKind::Cuee:
      return ee::CueeState::empty(c.p());
  }
  return lm::LmState::empty(c.p());
}

void stack(Matrix& x, Vector& y, const Matrix& more_x, const Vector& more_y) {
  const Eigen::Index n = y.size();
  if (n == 0) {
    x = more_x;
    y = more_y;
    return;
  }
  x.conservativeResize(n + more_x.rows(), Eigen::NoChange);
  x.bottomRows(more_x.rows()) = more_x;
  y.conservativeResize(n + more_y.size());
  y.tail(more_y.size()) = more_y;
}

std::string status_name(ee::FitStatus s) {
  return s == ee::FitStatus::Separation ? "separation" : "no convergence";
}

}  // namespace

StreamEngine::StreamEngine(ModelConfig config) : config_(std::move(config)), state_(initial_state(config_)) {
  if (config_.kind != ModelKind::Lm) family_ = config_.make_family();
  pending_x_.resize(0, static_cast<Eigen::Index>(config_.p()));
}

bool StreamEngine::singular() const {
  return std::visit([](const auto& s) { return !s.beta_available; }, state_);
}

ChunkOutcome StreamEngine::process_chunk(const Matrix& x, const Vector& y) {
  if (static_cast<std::size_t>(x.cols()) != config_.p()) {
    fail(ErrorCode::DimensionMismatch, "chunk has " + std::to_string(x.cols()) + " columns, model has " +
                                           std::to_string(config_.p()));
  }
  if (x.rows() != y.size()) fail(ErrorCode::DimensionMismatch, "X and y row counts differ");
  if (x.rows() == 0) return ChunkOutcome{true, std::nullopt};
  ChunkOutcome out = config_.kind == ModelKind::Lm ? process_lm(x, y) : process_ee(x, y);
  rows_consumed_ += static_cast<std::size_t>(x.rows());
  if (out.report) reports_.push_back(*out.report);
  return out;
}

ChunkOutcome StreamEngine::process_lm(const Matrix& x, const Vector& y) {
  auto& st = std::get<lm::LmState>(state_);
  ChunkOutcome out;
  out.report = diagnose(st, x, y);
  const lm::ChunkSummary summary = lm::summarize_chunk(x, y, config_.ginv);
  if (st.ridge_active() && lm::debias_ready(st, summary)) {
    st = lm::lm_debias(st, summary);
  } else {
    st = lm::lm_update(st, summary);
  }
  out.absorbed = true;
  return out;
}

std::optional<diag::DiagnosticReport> StreamEngine::diagnose(const lm::LmState& prev, const Matrix& x,
                                                              const Vector& y) const {
  const DiagnosticsConfig& d = config_.diagnostics;
  if (!(d.t_test || d.normal_f || d.asymptotic_f)) return std::nullopt;
  if (!prev.beta_available || prev.ridge_active() || prev.n_total <= prev.p) return std::nullopt;

  diag::DiagnosticReport report;
  report.chunk = prev.chunks_seen + 1;
  const diag::PredictiveResiduals pr = diag::predictive_residuals(prev, x, y);
  if (d.t_test) {
    const auto tests = diag::outlier_t_test(pr, prev, d.fdr_alpha);
    for (std::size_t i = 0; i < tests.size(); ++i) {
      if (!tests[i].flagged) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      report.observations.push_back(diag::ObservationDiagnostic{
          rows_consumed_ + i, pr.e_check(ii), pr.t_check(ii), tests[i].p_raw, tests[i].p_adj, true});
    }
  }
  if (d.normal_f) report.normal_f = diag::normal_f_test(pr, prev, x);
  const auto n = static_cast<std::size_t>(x.rows());
  if (d.asymptotic_f && n >= d.m && prev.n_total > d.m) {
    const Vector e_star = diag::gamma_whiten(prev, x, pr.e_check);
    report.asymptotic_f = diag::asymptotic_f_test(e_star, diag::SubgroupScheme::contiguous(n, d.m), prev);
  }
  return report;
}

ChunkOutcome StreamEngine::process_ee(const Matrix& x, const Vector& y) {
  Matrix xx = pending_x_;
  Vector yy = pending_y_;
  stack(xx, yy, x, y);

  const ee::Family& family = *family_;
  const Vector* warm = nullptr;
  if (config_.irls.warm_start && !singular()) {
    warm = config_.kind == ModelKind::Cee ? &std::get<ee::CeeState>(state_).beta
                                          : &std::get<ee::CueeState>(state_).beta_tilde;
  }
  const ee::SubsetFit fit = ee::irls_solve(xx, yy, family, config_.irls, warm);
  if (fit.status != ee::FitStatus::Converged) {
    const std::size_t end = rows_consumed_ + static_cast<std::size_t>(x.rows());
    warnings_.push_back("rows " + std::to_string(end - static_cast<std::size_t>(yy.size())) + ".." +
                        std::to_string(end - 1) + ": " + status_name(fit.status) + ", merging with the next chunk");
    pending_x_ = std::move(xx);
    pending_y_ = std::move(yy);
    return ChunkOutcome{false, std::nullopt};
  }

  const ee::VarianceKind variance = config_.effective_variance();
  if (config_.kind == ModelKind::Cee) {
    auto& st = std::get<ee::CeeState>(state_);
    st = ee::cee_update(st, fit, ee::CeeOptions{variance, config_.ginv, config_.irls.rank_tol},
                        ee::ChunkData{&xx, &yy, &family});
  } else {
    auto& st = std::get<ee::CueeState>(state_);
    st = ee::cuee_update(st, fit, xx, yy, family, ee::CueeOptions{variance, config_.irls});
  }
  pending_x_.resize(0, static_cast<Eigen::Index>(config_.p()));
  pending_y_.resize(0);
  return ChunkOutcome{true, std::nullopt};
}

void StreamEngine::finish() {
  if (pending_y_.size() == 0) return;
  warnings_.push_back("end of input: dropped " + std::to_string(pending_y_.size()) +
                      " rows that never produced a converged fit");
  pending_x_.resize(0, static_cast<Eigen::Index>(config_.p()));
  pending_y_.resize(0);
}

nlohmann::json StreamEngine::snapshot() const {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["config_hash"] = config_hash(config_);
  j["schema_fingerprint"] = schema_fingerprint(config_);
  j["config"] = to_json(config_);
  j["rows_consumed"] = rows_consumed_;
  j["state"] = std::visit([](const auto& s) { return snapshot::to_json(s); }, state_);
  j["chunks_seen"] = std::visit([](const auto& s) { return s.chunks_seen; }, state_);
  j["pending"] = {{"x", json_util::from_matrix(pending_x_)}, {"y", json_util::from_vector(pending_y_)}};
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : reports_) reports.push_back(diag::to_json(r));
  j["diagnostics"] = std::move(reports);
  j["warnings"] = warnings_;
  return j;
}

StreamEngine StreamEngine::from_snapshot(const nlohmann::json& snap) {
  using json_util::field;
  if (!snap.is_object() || !snap.contains("format") || snap["format"] != kFormat) {
    fail(ErrorCode::CorruptSnapshot, "not a streamstat snapshot");
  }
  if (field(snap, "version") != kVersion) fail(ErrorCode::CorruptSnapshot, "unsupported snapshot version");

  ModelConfig cfg;
  try {
    cfg = parse_model_config(field(snap, "config"));
  } catch (const Error& e) {
    fail(ErrorCode::CorruptSnapshot, std::string("embedded config: ") + e.what());
  }
  if (field(snap, "config_hash") != config_hash(cfg) || field(snap, "schema_fingerprint") != schema_fingerprint(cfg)) {
    fail(ErrorCode::CorruptSnapshot, "config hash does not match the embedded config");
  }

  StreamEngine eng(cfg);
  const nlohmann::json& st = field(snap, "state");
  switch (cfg.kind) {
    case ModelKind::Lm:
      eng.state_ = snapshot::lm_state_from_json(st);
      break;
    case ModelKind::Cee:
      eng.state_ = snapshot::cee_state_from_json(st);
      break;
    case ModelKind::Cuee:
      eng.state_ = snapshot::cuee_state_from_json(st);
      break;
  }
  if (std::visit([](const auto& s) { return s.p; }, eng.state_) != cfg.p()) {
    fail(ErrorCode::CorruptSnapshot, "state dimension does not match the config");
  }
  const auto& rows = field(snap, "rows_consumed");
  if (!rows.is_number_unsigned()) fail(ErrorCode::CorruptSnapshot, "rows_consumed must be a non-negative integer");
  eng.rows_consumed_ = rows.get<std::size_t>();

  const auto& pending = field(snap, "pending");
  eng.pending_y_ = json_util::to_vector(field(pending, "y"));
  if (eng.pending_y_.size() > 0) {
    eng.pending_x_ = json_util::to_matrix(field(pending, "x"));
    if (eng.pending_x_.rows() != eng.pending_y_.size() ||
        static_cast<std::size_t>(eng.pending_x_.cols()) != cfg.p()) {
      fail(ErrorCode::CorruptSnapshot, "pending rows have the wrong shape");
    }
  }
  for (const auto& r : field(snap, "diagnostics")) eng.reports_.push_back(diag::diagnostic_report_from_json(r));
  for (const auto& w : field(snap, "warnings")) {
    if (!w.is_string()) fail(ErrorCode::CorruptSnapshot, "warnings must be strings");
    eng.warnings_.push_back(w.get<std::string>());
  }
  return eng;
}

StreamEngine StreamEngine::resume(const nlohmann::json& snap, const ModelConfig& config) {
  StreamEngine eng = from_snapshot(snap);
  if (schema_fingerprint(eng.config_) != schema_fingerprint(config)) {
    fail(ErrorCode::SchemaMismatch, "snapshot schema fingerprint does not match the input columns");
  }
  if (config_hash(eng.config_) != config_hash(config)) {
    fail(ErrorCode::SchemaMismatch, "snapshot was written under a different model config");
  }
  return eng;
}

}  // namespace streamstat::engine
