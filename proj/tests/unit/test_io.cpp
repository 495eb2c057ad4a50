#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "streamstat/csv.hpp"
#include "streamstat/json_util.hpp"
#include "streamstat/model_config.hpp"
#include "streamstat/snapshot.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace streamstat;
using nlohmann::json;

TEST(CsvReader, HandlesQuotesNewlinesAndCrlf) {
  std::istringstream in("a,b\r\n\"x,1\",\"he said \"\"hi\"\"\"\r\n\"multi\nline\",3\n");
  io::CsvReader r(in);
  std::vector<std::string> f;
  ASSERT_TRUE(r.next(f));
  EXPECT_EQ(f, (std::vector<std::string>{"a", "b"}));
  ASSERT_TRUE(r.next(f));
  EXPECT_EQ(f, (std::vector<std::string>{"x,1", "he said \"hi\""}));
  EXPECT_EQ(r.record_line(), 2u);
  ASSERT_TRUE(r.next(f));
  EXPECT_EQ(f, (std::vector<std::string>{"multi\nline", "3"}));
  EXPECT_EQ(r.record_line(), 3u);
  EXPECT_FALSE(r.next(f));
}

TEST(CsvReader, UnterminatedQuoteIsParseError) {
  std::istringstream in("a\n\"open\n");
  io::CsvReader r(in);
  std::vector<std::string> f;
  ASSERT_TRUE(r.next(f));
  EXPECT_STREAMSTAT_ERROR(r.next(f), ErrorCode::ParseError);
}

TEST(ParseCell, StrictDecimals) {
  EXPECT_DOUBLE_EQ(io::parse_cell("1.5e3", 1, "x"), 1500.0);
  EXPECT_DOUBLE_EQ(io::parse_cell("+2", 1, "x"), 2.0);
  EXPECT_DOUBLE_EQ(io::parse_cell(" -0.25 ", 1, "x"), -0.25);
  for (const char* bad : {"", "NA", "nan", "inf", "1,5", "abc", "1.0x"}) {
    EXPECT_STREAMSTAT_ERROR(io::parse_cell(bad, 7, "x"), ErrorCode::ParseError);
  }
  try {
    io::parse_cell("NA", 12, "income");
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 12"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("income"), std::string::npos);
  }
}

TEST(ChunkSource, SplitsRowsAndSelectsColumns) {
  std::istringstream in("z,y,x1,x2\n9,1,2,3\n9,4,5,6\n\n9,7,8,9\n");
  io::ChunkSource src(in, io::ColumnSelection{"y", {"x2", "x1"}, true}, 2);
  auto c1 = src.next();
  ASSERT_TRUE(c1);
  EXPECT_EQ(c1->x.rows(), 2);
  EXPECT_EQ(c1->x.cols(), 3);
  EXPECT_DOUBLE_EQ(c1->x(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(c1->x(0, 1), 3.0);
  EXPECT_DOUBLE_EQ(c1->x(1, 2), 5.0);
  EXPECT_DOUBLE_EQ(c1->y(1), 4.0);
  auto c2 = src.next();
  ASSERT_TRUE(c2);
  EXPECT_EQ(c2->x.rows(), 1);  // short final chunk, blank line skipped
  EXPECT_EQ(c2->first_row, 2u);
  EXPECT_FALSE(src.next());
  EXPECT_EQ(src.rows_read(), 3u);
}

TEST(ChunkSource, SchemaAndParseErrors) {
  std::istringstream missing("y,x1\n1,2\n");
  EXPECT_STREAMSTAT_ERROR((io::ChunkSource{missing, io::ColumnSelection{"y", {"x9"}, true}, 10}),
                          ErrorCode::SchemaMismatch);
  std::istringstream ragged("y,x1\n1,2\n3\n");
  io::ChunkSource src(ragged, io::ColumnSelection{"y", {"x1"}, true}, 10);
  EXPECT_STREAMSTAT_ERROR(src.next(), ErrorCode::ParseError);
  std::istringstream na("y,x1\n1,NA\n");
  io::ChunkSource src2(na, io::ColumnSelection{"y", {"x1"}, true}, 10);
  EXPECT_STREAMSTAT_ERROR(src2.next(), ErrorCode::ParseError);
}

TEST(ChunkSource, SkipRowsThenPipelineMatchesDirectRead) {
  std::ostringstream csv;
  csv << "y,x\n";
  for (int i = 0; i < 103; ++i) csv << i << ',' << 2 * i << '\n';
  std::istringstream a(csv.str()), b(csv.str());
  io::ChunkSource direct(a, io::ColumnSelection{"y", {"x"}, false}, 10);
  io::ChunkSource skipped(b, io::ColumnSelection{"y", {"x"}, false}, 10);
  for (int i = 0; i < 3; ++i) direct.next();
  skipped.skip_rows(30);
  io::PipelinedChunkSource pipe(skipped, 2);
  std::size_t chunks = 0;
  while (auto d = direct.next()) {
    auto p = pipe.next();
    ASSERT_TRUE(p);
    EXPECT_EQ(d->x, p->x);
    EXPECT_EQ(d->y, p->y);
    ++chunks;
  }
  EXPECT_FALSE(pipe.next());
  EXPECT_EQ(chunks, 8u);
}

TEST(ChunkSource, PipelineRethrowsParseErrors) {
  std::istringstream in("y,x\n1,2\n3,oops\n");
  io::ChunkSource src(in, io::ColumnSelection{"y", {"x"}, true}, 1);
  io::PipelinedChunkSource pipe(src, 1);
  EXPECT_TRUE(pipe.next());
  EXPECT_STREAMSTAT_ERROR(pipe.next(), ErrorCode::ParseError);
}

TEST(ModelConfig, ParsesAndHashes) {
  const json j = json::parse(R"({"kind":"cuee","family":"poisson",
    "formula":{"response":"y","covariates":["a","b"]},"chunk_size":50,"ginv":"rao",
    "irls":{"tol":1e-9,"max_iter":30,"warm_start":true}})");
  const engine::ModelConfig c = engine::parse_model_config(j);
  EXPECT_EQ(c.kind, engine::ModelKind::Cuee);
  EXPECT_EQ(c.p(), 3u);
  EXPECT_EQ(c.coefficient_names().front(), "(intercept)");
  EXPECT_EQ(c.ginv, numkern::GinvKind::Rao);
  EXPECT_EQ(c.irls.ginv, numkern::GinvKind::Rao);
  EXPECT_TRUE(c.irls.warm_start);
  EXPECT_EQ(c.effective_variance(), ee::VarianceKind::Robust);
  const engine::ModelConfig again = engine::parse_model_config(engine::to_json(c));
  EXPECT_EQ(engine::config_hash(again), engine::config_hash(c));
  EXPECT_EQ(engine::config_hash(c).size(), 16u);
  engine::ModelConfig other = c;
  other.chunk_size = 51;
  EXPECT_NE(engine::config_hash(other), engine::config_hash(c));
  EXPECT_EQ(engine::schema_fingerprint(other), engine::schema_fingerprint(c));
}

TEST(ModelConfig, RejectsInvalidInput) {
  const auto parse = [](const char* s) { return engine::parse_model_config(json::parse(s)); };
  EXPECT_STREAMSTAT_ERROR(parse(R"({"kind":"lm","formula":{"response":"y","covariates":[]},"colour":1})"),
                          ErrorCode::InvalidConfig);
  EXPECT_STREAMSTAT_ERROR(parse(R"({"kind":"glm","formula":{"response":"y","covariates":[]}})"),
                          ErrorCode::InvalidConfig);
  EXPECT_STREAMSTAT_ERROR(parse(R"({"kind":"cee","formula":{"response":"y","covariates":["x"]}})"),
                          ErrorCode::InvalidConfig);
  EXPECT_STREAMSTAT_ERROR(parse(R"({"kind":"lm","formula":{"response":"y","covariates":["x"]},"chunk_size":0})"),
                          ErrorCode::InvalidConfig);
  EXPECT_STREAMSTAT_ERROR(parse(R"({"kind":"lm","formula":{"response":"y","covariates":["x"]},"ridge_lambda":-1})"),
                          ErrorCode::NonPositiveLambda);
  EXPECT_STREAMSTAT_ERROR(
      parse(R"({"kind":"lm","formula":{"response":"y","covariates":["x"]},"diagnostics":{"fdr_alpha":1.0}})"),
      ErrorCode::InvalidConfig);
  EXPECT_STREAMSTAT_ERROR(parse(R"({"kind":"lm","formula":{"response":"y","covariates":["y"]}})"),
                          ErrorCode::InvalidConfig);
}

TEST(JsonUtil, DoublesRoundTripExactly) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) / 3.0;
    EXPECT_EQ(json_util::to_double(json::parse(json_util::from_double(v).dump())), v);
  }
  EXPECT_TRUE(std::isinf(json_util::to_double(json_util::from_double(-INFINITY))));
  EXPECT_TRUE(std::isnan(json_util::to_double(json_util::from_double(NAN))));
  EXPECT_STREAMSTAT_ERROR(json_util::to_double(json("text")), ErrorCode::CorruptSnapshot);
  EXPECT_STREAMSTAT_ERROR(json_util::field(json::object(), "missing"), ErrorCode::CorruptSnapshot);
}

TEST(Snapshot, StatesRoundTripByteIdentically) {
  std::mt19937_64 rng(62);
  const Matrix x = oracle::random_design(rng, 40, 3);
  const Vector y = x * Vector::Ones(3);
  lm::LmState l = lm::lm_update(lm::lm_init_ridge(3, 0.5), lm::summarize_chunk(x, y));
  const json jl = snapshot::to_json(l);
  EXPECT_EQ(snapshot::to_json(snapshot::lm_state_from_json(json::parse(jl.dump()))).dump(), jl.dump());

  ee::CeeState c = ee::CeeState::empty(3);
  c.beta = Vector::Constant(3, 1.0 / 3.0);
  c.v = Matrix::Identity(3, 3) * 0.1;
  const json jc = snapshot::to_json(c);
  EXPECT_EQ(snapshot::to_json(snapshot::cee_state_from_json(json::parse(jc.dump()))).dump(), jc.dump());

  ee::CueeState u = ee::CueeState::empty(3);
  u.b_vec(1) = 1e-300;
  u.beta_tilde(2) = -7.123456789012345;
  const json ju = snapshot::to_json(u);
  EXPECT_EQ(snapshot::to_json(snapshot::cuee_state_from_json(json::parse(ju.dump()))).dump(), ju.dump());
}

TEST(Snapshot, CorruptInputIsRejected) {
  json j = snapshot::to_json(ee::CeeState::empty(3));
  j["beta"] = json::array({1.0, 2.0});
  EXPECT_STREAMSTAT_ERROR(snapshot::cee_state_from_json(j), ErrorCode::CorruptSnapshot);
  json k = snapshot::to_json(lm::LmState::empty(2));
  k.erase("w");
  EXPECT_STREAMSTAT_ERROR(snapshot::lm_state_from_json(k), ErrorCode::CorruptSnapshot);
}
