#include <random>

#include <gtest/gtest.h>

#include "streamstat/engine.hpp"
#include "streamstat/json_util.hpp"
#include "streamstat/report.hpp"
#include "streamstat/sim/generators.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace streamstat;
using nlohmann::json;

namespace {

engine::ModelConfig lm_config(std::size_t chunk) {
  engine::ModelConfig c;
  c.kind = engine::ModelKind::Lm;
  c.response = "y";
  c.covariates = {"x1", "x2"};
  c.chunk_size = chunk;
  c.diagnostics.t_test = true;
  c.diagnostics.normal_f = true;
  c.diagnostics.asymptotic_f = true;
  return c;
}

engine::ModelConfig ee_config(engine::ModelKind kind, const char* family) {
  engine::ModelConfig c;
  c.kind = kind;
  c.family = family;
  c.response = "y";
  c.covariates = {"x1", "x2"};
  c.chunk_size = 100;
  return c;
}

struct Data {
  Matrix x;
  Vector y;
};

Data lm_data(std::uint64_t seed, Eigen::Index n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Data d{oracle::random_design(rng, n, 3), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) d.y(i) = 1.0 + d.x(i, 1) - d.x(i, 2) + z(rng);
  return d;
}

void feed(engine::StreamEngine& eng, const Data& d, Eigen::Index chunk, Eigen::Index from = 0) {
  for (Eigen::Index at = from; at < d.x.rows(); at += chunk) {
    const Eigen::Index len = std::min(chunk, d.x.rows() - at);
    eng.process_chunk(d.x.middleRows(at, len), d.y.segment(at, len));
  }
}

}  // namespace

TEST(Engine, LmMatchesBatchAndRecordsDiagnostics) {
  Data d = lm_data(71, 500);
  d.y(450) += 25.0;
  engine::StreamEngine eng(lm_config(100));
  feed(eng, d, 100);
  eng.finish();
  const auto& st = std::get<lm::LmState>(eng.state());
  EXPECT_LT(oracle::rel_diff(st.beta, oracle::batch_ls(d.x, d.y).beta), 1e-10);
  EXPECT_EQ(eng.rows_consumed(), 500u);
  ASSERT_EQ(eng.diagnostics().size(), 4u);  // chunk 1 has no history
  const auto& last = eng.diagnostics().back();
  EXPECT_EQ(last.chunk, 5u);
  ASSERT_TRUE(last.normal_f && last.asymptotic_f);
  EXPECT_LT(last.normal_f->p_value, 0.05);
  bool found = false;
  for (const auto& o : last.observations) found |= o.index == 450 && o.flagged;
  EXPECT_TRUE(found);
}

TEST(Engine, RidgeStartDebiasesAndSkipsDiagnosticsMeanwhile) {
  Data d = lm_data(72, 300);
  d.x.topRows(100).col(2).setZero();
  engine::ModelConfig cfg = lm_config(100);
  cfg.ridge_lambda = 1.0;
  engine::StreamEngine eng(cfg);
  feed(eng, d, 100);
  const auto& st = std::get<lm::LmState>(eng.state());
  EXPECT_FALSE(st.ridge_active());
  EXPECT_LT(oracle::rel_diff(st.beta, oracle::batch_ls(d.x, d.y).beta), 1e-8);
  ASSERT_FALSE(eng.diagnostics().empty());
  EXPECT_EQ(eng.diagnostics().front().chunk, 3u);
}

TEST(Engine, SnapshotResumeContinuesIdentically) {
  const Data d = lm_data(73, 430);
  engine::StreamEngine full(lm_config(50));
  feed(full, d, 50);
  full.finish();

  engine::StreamEngine first(lm_config(50));
  feed(first, Data{d.x.topRows(200), d.y.head(200)}, 50);
  const json snap = json::parse(first.snapshot().dump());
  engine::StreamEngine resumed = engine::StreamEngine::resume(snap, lm_config(50));
  EXPECT_EQ(resumed.rows_consumed(), 200u);
  feed(resumed, d, 50, 200);
  resumed.finish();
  EXPECT_EQ(resumed.snapshot().dump(), full.snapshot().dump());
}

TEST(Engine, ResumeChecksSchemaAndConfig) {
  engine::StreamEngine eng(lm_config(50));
  const json snap = eng.snapshot();
  engine::ModelConfig other_cols = lm_config(50);
  other_cols.covariates = {"x1", "x3"};
  EXPECT_STREAMSTAT_ERROR(engine::StreamEngine::resume(snap, other_cols), ErrorCode::SchemaMismatch);
  EXPECT_STREAMSTAT_ERROR(engine::StreamEngine::resume(snap, lm_config(60)), ErrorCode::SchemaMismatch);
  json bad = snap;
  bad["config_hash"] = "0000000000000000";
  EXPECT_STREAMSTAT_ERROR(engine::StreamEngine::from_snapshot(bad), ErrorCode::CorruptSnapshot);
  json wrong = snap;
  wrong["format"] = "other";
  EXPECT_STREAMSTAT_ERROR(engine::StreamEngine::from_snapshot(wrong), ErrorCode::CorruptSnapshot);
}

TEST(Engine, SeparatedChunkIsMergedWithTheNext) {
  sim::Rng rng = sim::make_rng(74, 0);
  const std::vector<sim::CovariateSpec> covs{sim::CovariateSpec::normal(), sim::CovariateSpec::normal()};
  sim::EeDataset d = sim::gen_ee_dataset(ee::Family::logistic(), Vector::Constant(3, 0.5), covs, 400, rng);
  // Make the first 10 rows perfectly separated on x1.
  for (Eigen::Index i = 0; i < 10; ++i) d.y(i) = d.x(i, 1) > 0.0 ? 1.0 : 0.0;
  engine::ModelConfig cfg = ee_config(engine::ModelKind::Cuee, "logistic");
  engine::StreamEngine eng(cfg);
  EXPECT_FALSE(eng.process_chunk(d.x.topRows(10), d.y.head(10)).absorbed);
  EXPECT_EQ(eng.pending_rows(), 10u);
  EXPECT_FALSE(eng.warnings().empty());
  EXPECT_TRUE(eng.process_chunk(d.x.middleRows(10, 190), d.y.segment(10, 190)).absorbed);
  EXPECT_EQ(eng.pending_rows(), 0u);
  const auto& st = std::get<ee::CueeState>(eng.state());
  EXPECT_EQ(st.n_total, 200u);
  EXPECT_EQ(st.chunks_seen, 1u);
}

TEST(Engine, PendingRowsAreDroppedAtEnd) {
  Matrix x(6, 3);
  Vector y(6);
  for (Eigen::Index i = 0; i < 6; ++i) {
    x.row(i) << 1.0, static_cast<double>(i) - 2.5, 0.0;
    y(i) = i >= 3 ? 1.0 : 0.0;
  }
  engine::StreamEngine eng(ee_config(engine::ModelKind::Cee, "logistic"));
  eng.process_chunk(x, y);
  eng.finish();
  EXPECT_EQ(eng.pending_rows(), 0u);
  EXPECT_TRUE(eng.singular());
  EXPECT_GE(eng.warnings().size(), 2u);
}

TEST(Engine, RejectsWrongWidth) {
  engine::StreamEngine eng(lm_config(10));
  EXPECT_STREAMSTAT_ERROR(eng.process_chunk(Matrix::Ones(4, 2), Vector::Ones(4)), ErrorCode::DimensionMismatch);
}

TEST(Report, CoefAnovaWaldAreThinViews) {
  const Data d = lm_data(75, 200);
  engine::StreamEngine eng(lm_config(100));
  feed(eng, d, 100);
  const auto& st = std::get<lm::LmState>(eng.state());

  const json coef = report::build(eng, report::ReportKind::Coef);
  const auto tests = lm::coef_t_tests(st);
  ASSERT_EQ(coef["rows"].size(), 3u);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(json_util::to_double(coef["rows"][j]["estimate"]), tests[j].estimate);
    EXPECT_EQ(json_util::to_double(coef["rows"][j]["t"]), tests[j].t);
    EXPECT_EQ(json_util::to_double(coef["rows"][j]["p_value"]), tests[j].p_value);
  }
  EXPECT_EQ(coef["rows"][0]["name"], "(intercept)");

  const json an = report::build(eng, report::ReportKind::Anova);
  EXPECT_EQ(json_util::to_double(an["rows"][0]["f"]), lm::anova(st).f_stat);

  const Matrix c = report::default_contrast(eng.config());
  EXPECT_EQ(c.rows(), 2);
  const json w = report::build(eng, report::ReportKind::Wald);
  EXPECT_EQ(json_util::to_double(w["statistic"]), lm::glh_f_test(st, c).f_stat);

  const std::string text = report::render_text(coef);
  EXPECT_NE(text.find("x2"), std::string::npos);
}

TEST(Report, AnovaWithTooFewRowsSaysInsufficientData) {
  const Data d = lm_data(76, 3);
  engine::StreamEngine eng(lm_config(10));
  feed(eng, d, 10);
  const json an = report::build(eng, report::ReportKind::Anova);
  EXPECT_EQ(an["status"], "insufficient data");
  EXPECT_NE(report::render_text(an).find("insufficient data"), std::string::npos);
}

TEST(Report, EeWaldMatchesLibrary) {
  sim::Rng rng = sim::make_rng(77, 0);
  const std::vector<sim::CovariateSpec> covs{sim::CovariateSpec::normal(), sim::CovariateSpec::bernoulli(0.3)};
  const sim::EeDataset d = sim::gen_ee_dataset(ee::Family::poisson(), Vector::Constant(3, 0.2), covs, 600, rng);
  engine::StreamEngine eng(ee_config(engine::ModelKind::Cee, "poisson"));
  feed(eng, Data{d.x, d.y}, 200);
  Matrix c = Matrix::Zero(1, 3);
  c(0, 2) = 1.0;
  const json w = report::build(eng, report::ReportKind::Wald, c);
  const auto& st = std::get<ee::CeeState>(eng.state());
  EXPECT_EQ(json_util::to_double(w["statistic"]), ee::wald_test(st.beta, st.v, c).w);
  EXPECT_EQ(w["test"], "chi2");
  EXPECT_STREAMSTAT_ERROR(report::build(eng, report::ReportKind::Anova), ErrorCode::InvalidConfig);
  EXPECT_STREAMSTAT_ERROR(report::contrast_from_json(json::array({json::array({1.0, 2.0})}), 3),
                          ErrorCode::DimensionMismatch);
}
