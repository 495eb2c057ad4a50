#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "streamstat/sim/runners.hpp"
#include "support/test_util.hpp"

using namespace streamstat;
using namespace streamstat::sim;

TEST(SkewT, ClosedFormMatchesQuadratureConstants) {
  const SkewTMoments m = skew_t_moments(3.0, 1.5);
  EXPECT_NEAR(m.m1, kSkewTNu3Gamma15Mean, 1e-14);
  EXPECT_NEAR(m.m2, kSkewTNu3Gamma15SecondMoment, 1e-14);
  const SkewTMoments sym = skew_t_moments(5.0, 1.0);
  EXPECT_DOUBLE_EQ(sym.m1, 0.0);
  EXPECT_NEAR(sym.m2, 5.0 / 3.0, 1e-15);
  EXPECT_STREAMSTAT_ERROR(skew_t_moments(2.0, 1.5), ErrorCode::InvalidNu);
  EXPECT_STREAMSTAT_ERROR(gen_skew_t(1.5, 1.5, 10, 1), ErrorCode::InvalidNu);
}

TEST(SkewT, StandardizedDrawsHaveUnitMoments) {
  const std::size_t n = 1000000;
  const Vector v = gen_skew_t(3.0, 1.5, n, 2016);
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / static_cast<double>(n - 1);
  EXPECT_LT(std::fabs(mean), 3.0 / std::sqrt(static_cast<double>(n)));
  // The fourth moment is infinite at nu = 3, so bound the variance loosely.
  EXPECT_NEAR(var, 1.0, 0.05);
  const double skew = (v.array() - mean).cube().mean();
  EXPECT_GT(skew, 0.0);
}

TEST(SkewT, GammaOneIsSymmetric) {
  const Vector v = gen_skew_t(3.0, 1.0, 200000, 7);
  const double positive = static_cast<double>((v.array() > 0.0).count()) / 200000.0;
  EXPECT_NEAR(positive, 0.5, 3.0 * 0.5 / std::sqrt(200000.0));
}

TEST(OutlierStream, ShapesLabelsAndContaminationRate) {
  OutlierSimConfig cfg;
  cfg.k_star = 3;
  cfg.n_k = 100;
  Rng rng = make_rng(5, 0);
  auto chunks = gen_outlier_stream(cfg, rng);
  ASSERT_EQ(chunks.size(), 3u);
  for (const auto& c : chunks) {
    EXPECT_EQ(c.x.rows(), 100);
    EXPECT_EQ(c.x.cols(), 5);
    EXPECT_TRUE((c.x.col(0).array() == 1.0).all());
    EXPECT_EQ(std::count(c.outlier.begin(), c.outlier.end(), true), 0);  // delta = 0
  }
  cfg.delta = 4.0;
  std::size_t hits = 0;
  const std::size_t reps = 500;
  for (std::size_t r = 0; r < reps; ++r) {
    Rng g = make_rng(6, r);
    const auto cs = gen_outlier_stream(cfg, g);
    hits += static_cast<std::size_t>(std::count(cs.back().outlier.begin(), cs.back().outlier.end(), true));
    EXPECT_EQ(std::count(cs.front().outlier.begin(), cs.front().outlier.end(), true), 0);
  }
  EXPECT_NEAR(static_cast<double>(hits) / static_cast<double>(reps * 100), 0.05, 0.01);
  cfg.contamination_rate = 1.5;
  EXPECT_STREAMSTAT_ERROR(gen_outlier_stream(cfg, rng), ErrorCode::InvalidConfig);
}

TEST(EeDataset, CovariateMomentsPass) {
  const std::vector<CovariateSpec> covs{CovariateSpec::normal(), CovariateSpec::bernoulli(0.25),
                                        CovariateSpec::bernoulli(0.1)};
  Rng rng = make_rng(8, 0);
  const EeDataset d = gen_ee_dataset(ee::Family::poisson(), Vector::Constant(4, 0.3), covs, 20000, rng);
  for (const auto& m : check_covariate_moments(d.x, covs)) EXPECT_TRUE(m.pass) << "column " << m.column;
  EXPECT_TRUE((d.y.array() >= 0.0).all());
  EXPECT_TRUE((d.y.array() == d.y.array().round()).all());
}

TEST(Rng, StreamsAreDistinctAndReproducible) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 1000; ++s) seeds.insert(derive_seed(42, s));
  EXPECT_EQ(seeds.size(), 1000u);
  Rng a = make_rng(42, 3), b = make_rng(42, 3), c = make_rng(42, 4);
  EXPECT_EQ(a(), b());
  EXPECT_NE(make_rng(42, 3)(), c());
}

TEST(Rng, ParallelForCoversEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; }, 4);
  EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}

TEST(Runners, OutputIndependentOfWorkerCount) {
  PowerStudyConfig cfg;
  cfg.reps = 12;
  cfg.k_star = {3};
  cfg.n_k = {40};
  cfg.delta = {0.0, 4.0};
  std::ostringstream one, many;
  cfg.workers = 1;
  write_power_csv(one, run_power_study(cfg));
  cfg.workers = 4;
  write_power_csv(many, run_power_study(cfg));
  EXPECT_EQ(one.str(), many.str());
  EXPECT_NE(one.str().find("se_f"), std::string::npos);

  RmseVsKConfig r;
  r.reps = 3;
  r.n_total = 2000;
  r.k_grid = {1, 4};
  std::ostringstream a, b;
  r.workers = 1;
  const auto rows = run_rmse_vs_k(r);
  write_rmse_vs_k_csv(a, rows);
  r.workers = 3;
  write_rmse_vs_k_csv(b, run_rmse_vs_k(r));
  EXPECT_EQ(a.str(), b.str());
  // One chunk: CEE and CUEE are both the pooled fit.
  EXPECT_NEAR(rows[0].rmse_cee.mean, rows[0].rmse_cuee.mean, 1e-8);
}

TEST(Runners, FpFnHasNoFalseNegativesWithoutOutliers) {
  FpFnConfig cfg;
  cfg.reps = 10;
  cfg.k_star = {5};
  cfg.n_k = {100};
  cfg.delta = {0.0, 6.0};
  const auto cells = run_fpfn_study(cfg);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_DOUBLE_EQ(cells[0].fn_predictive.mean, 0.0);
  EXPECT_DOUBLE_EQ(cells[0].fn_studentized.mean, 0.0);
  EXPECT_LT(cells[0].fp_predictive.mean, 1.0);
}

TEST(Runners, GinvInvarianceSmall) {
  GinvInvarianceConfig cfg;
  cfg.reps = 2;
  cfg.n_total = 2000;
  const auto r = run_ginv_invariance(cfg);
  ASSERT_EQ(r.rows.size(), 5u);
  for (const auto& row : r.rows) EXPECT_LT(row.max_abs_diff, 1e-8);
  EXPECT_GT(r.rank_deficient_chunk_share, 0.5);
}

TEST(Runners, ConfigJsonValidation) {
  const auto c = power_config_from_json(nlohmann::json::parse(R"({"reps":7,"k_star":[5],"errors":["skew_t"]})"));
  EXPECT_EQ(c.reps, 7u);
  EXPECT_EQ(c.errors.size(), 1u);
  EXPECT_EQ(c.errors[0], ErrorKind::SkewT);
  EXPECT_STREAMSTAT_ERROR(power_config_from_json(nlohmann::json::parse(R"({"repz":7})")), ErrorCode::InvalidConfig);
  const auto p = poisson_bias_config_from_json(
      nlohmann::json::parse(R"({"covariates":[{"kind":"bernoulli","p":0.2}],"beta":[0.1,0.2]})"));
  EXPECT_EQ(p.covariates.size(), 1u);
  EXPECT_EQ(p.beta.size(), 2);
  EXPECT_STREAMSTAT_ERROR(
      rmse_vs_k_config_from_json(nlohmann::json::parse(R"({"covariates":[{"kind":"gamma"}]})")),
      ErrorCode::InvalidConfig);
}
