#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "streamstat/ee_stream.hpp"
#include "streamstat/sim/generators.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace streamstat;
using namespace streamstat::ee;

namespace {

sim::EeDataset dataset(const Family& fam, std::size_t n, std::uint64_t seed, Eigen::Index p = 4) {
  sim::Rng rng = sim::make_rng(seed, 0);
  const std::vector<sim::CovariateSpec> covs(static_cast<std::size_t>(p - 1), sim::CovariateSpec::normal());
  return sim::gen_ee_dataset(fam, Vector::Constant(p, 0.4), covs, n, rng);
}

// Finite-difference Jacobian of -M at beta.
Matrix fd_jacobian(const Matrix& x, const Vector& y, const Family& fam, const Vector& beta) {
  const Eigen::Index p = beta.size();
  Matrix j(p, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double h = 1e-6 * std::max(1.0, std::fabs(beta(k)));
    Vector up = beta, dn = beta;
    up(k) += h;
    dn(k) -= h;
    j.col(k) = -(score_eval(x, y, fam, up).m_vec - score_eval(x, y, fam, dn).m_vec) / (2.0 * h);
  }
  return j;
}

}  // namespace

TEST(Family, CanonicalValues) {
  const Vector eta = Vector::Zero(1);
  const FamilyEval lg = Family::logistic().eval(eta);
  EXPECT_DOUBLE_EQ(lg.mu(0), 0.5);
  EXPECT_DOUBLE_EQ(lg.s2w(0), 0.25);
  EXPECT_DOUBLE_EQ(lg.sw(0), 1.0);
  const FamilyEval po = Family::poisson().eval(Vector::Constant(1, std::log(3.0)));
  EXPECT_NEAR(po.mu(0), 3.0, 1e-14);
  EXPECT_NEAR(po.s2w(0), 3.0, 1e-14);
  const FamilyEval ga = Family::gaussian().eval(Vector::Constant(1, 2.5));
  EXPECT_DOUBLE_EQ(ga.mu(0), 2.5);
  EXPECT_DOUBLE_EQ(ga.s2w(0), 1.0);
}

TEST(Family, NamesAndDomain) {
  EXPECT_EQ(Family::from_name("logistic").kind(), Family::Kind::Logistic);
  EXPECT_EQ(Family::from_name("quasi:probit").kind(), Family::Kind::Quasi);
  EXPECT_STREAMSTAT_ERROR(Family::from_name("binomial"), ErrorCode::InvalidConfig);
  EXPECT_STREAMSTAT_ERROR(Family::poisson().eval(Vector::Constant(1, 800.0)), ErrorCode::DomainViolation);
  EXPECT_TRUE(Family::logistic().pinned(Vector::Constant(2, 1.0)));
  EXPECT_FALSE(Family::logistic().pinned(Vector::Constant(2, 0.5)));
}

TEST(ScoreEval, InformationIsJacobianOfNegativeScore) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> z(0.0, 0.5);
  for (const char* name : {"logistic", "poisson", "gaussian", "quasi:probit", "quasi:log"}) {
    const Family fam = Family::from_name(name);
    const Family gen = std::string(name) == "poisson" || std::string(name) == "quasi:log" ? Family::poisson()
                                                                                            : Family::logistic();
    const sim::EeDataset d = dataset(gen, 200, 42);
    for (int rep = 0; rep < 5; ++rep) {
      const Vector beta = Vector::NullaryExpr(4, [&] { return z(rng); });
      const Matrix a = score_eval(d.x, d.y, fam, beta).a_mat;
      const Matrix fd = fd_jacobian(d.x, d.y, fam, beta);
      EXPECT_LT((a - fd).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff(), 1e-6) << name;
    }
  }
}

TEST(Irls, MatchesNewtonOracle) {
  for (const char* name : {"logistic", "poisson"}) {
    const Family fam = Family::from_name(name);
    const sim::EeDataset d = dataset(fam, 500, 43);
    const SubsetFit fit = irls_solve(d.x, d.y, fam, IrlsConfig{});
    ASSERT_EQ(fit.status, FitStatus::Converged) << name;
    EXPECT_LT((fit.beta_sub - oracle::glm_fit(name, d.x, d.y)).cwiseAbs().maxCoeff(), 1e-8) << name;
    EXPECT_LT(score_eval(d.x, d.y, fam, fit.beta_sub).m_vec.cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_EQ(fit.rank, 4u);
    EXPECT_EQ(fit.n, 500u);
  }
}

TEST(Irls, GaussianIsLeastSquares) {
  const sim::EeDataset d = dataset(Family::gaussian(), 100, 44);
  const SubsetFit fit = irls_solve(d.x, d.y, Family::gaussian(), IrlsConfig{});
  EXPECT_LT((fit.beta_sub - oracle::batch_ls(d.x, d.y).beta).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Irls, ReportsSeparation) {
  Matrix x(20, 2);
  Vector y(20);
  for (Eigen::Index i = 0; i < 20; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = static_cast<double>(i) - 9.5;
    y(i) = i >= 10 ? 1.0 : 0.0;
  }
  const SubsetFit fit = irls_solve(x, y, Family::logistic(), IrlsConfig{});
  EXPECT_EQ(fit.status, FitStatus::Separation);
  EXPECT_STREAMSTAT_ERROR(require_converged(fit), ErrorCode::Separation);
  IrlsConfig bad;
  bad.max_iter = 0;
  EXPECT_STREAMSTAT_ERROR(irls_solve(x, y, Family::logistic(), bad), ErrorCode::InvalidConfig);
}

TEST(Irls, RankDeficientChunkUsesGeneralizedInverse) {
  sim::EeDataset d = dataset(Family::logistic(), 300, 45);
  d.x.col(3) = d.x.col(2);
  for (const auto kind : {numkern::GinvKind::MoorePenrose, numkern::GinvKind::Rao}) {
    IrlsConfig cfg;
    cfg.ginv = kind;
    const SubsetFit fit = irls_solve(d.x, d.y, Family::logistic(), cfg);
    ASSERT_EQ(fit.status, FitStatus::Converged);
    EXPECT_EQ(fit.rank, 3u);
    EXPECT_FALSE(fit.full_rank());
    EXPECT_LT(score_eval(d.x, d.y, Family::logistic(), fit.beta_sub).m_vec.cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(Cee, EqualsAeeCombination) {
  for (const char* name : {"logistic", "poisson"}) {
    const Family fam = Family::from_name(name);
    const sim::EeDataset d = dataset(fam, 1200, 46);
    std::vector<SubsetFit> fits;
    CeeOptions opts;
    opts.variance = VarianceKind::Robust;
    CeeState st = CeeState::empty(4);
    for (Eigen::Index k = 0; k < 6; ++k) {
      const Matrix x = d.x.middleRows(200 * k, 200);
      const Vector y = d.y.segment(200 * k, 200);
      fits.push_back(irls_solve(x, y, fam, IrlsConfig{}));
      st = cee_update(st, fits.back(), opts, ChunkData{&x, &y, &fam});
    }
    const AeeResult aee = aee_combine(fits);
    EXPECT_LT(oracle::rel_diff(st.beta, aee.beta), 1e-12) << name;
    EXPECT_LT(oracle::rel_diff(st.v, aee.v), 1e-12) << name;
    EXPECT_TRUE(st.beta_available);
    EXPECT_EQ(st.n_total, 1200u);
  }
}

TEST(Cuee, SequentialEqualsOneShotOracle) {
  for (const char* name : {"logistic", "poisson"}) {
    const Family fam = Family::from_name(name);
    const sim::EeDataset d = dataset(fam, 1000, 47);
    CueeState st = CueeState::empty(4);
    Matrix a_tilde = Matrix::Zero(4, 4);
    Vector a_sum = Vector::Zero(4), m_sum = Vector::Zero(4);
    for (Eigen::Index k = 0; k < 5; ++k) {
      const Matrix x = d.x.middleRows(200 * k, 200);
      const Vector y = d.y.segment(200 * k, 200);
      st = cuee_update(st, x, y, fam, CueeOptions{});
      // Oracle: intermediary estimator from the stored sums and a Newton subset fit.
      const Vector beta_hat = oracle::glm_fit(name, x, y);
      const Matrix a_hat = oracle::glm_score(name, x, y, beta_hat).a;
      const Vector check = (a_tilde + a_hat).ldlt().solve(a_sum + a_hat * beta_hat);
      const oracle::Score at = oracle::glm_score(name, x, y, check);
      EXPECT_LT((st.beta_check - check).cwiseAbs().maxCoeff(), 1e-8) << name << " chunk " << k;
      a_tilde += at.a;
      a_sum += at.a * check;
      m_sum += at.m;
    }
    const Vector one_shot = a_tilde.ldlt().solve(a_sum + m_sum);
    EXPECT_LT((st.beta_tilde - one_shot).cwiseAbs().maxCoeff(), 1e-8) << name;
    // Sequential recursion against its own stored sums to machine precision.
    const Vector from_sums = st.a_tilde_cum.ldlt().solve(st.a_vec + st.b_vec);
    EXPECT_LT(oracle::rel_diff(st.beta_tilde, from_sums), 1e-12) << name;
  }
}

TEST(Cuee, SingleChunkReducesToSubsetFit) {
  const Family fam = Family::logistic();
  const sim::EeDataset d = dataset(fam, 400, 48);
  const SubsetFit fit = irls_solve(d.x, d.y, fam, IrlsConfig{});
  const CueeState cu = cuee_update(CueeState::empty(4), d.x, d.y, fam, CueeOptions{});
  const CeeState ce = cee_update(CeeState::empty(4), fit, CeeOptions{});
  EXPECT_LT((cu.beta_tilde - fit.beta_sub).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((ce.beta - fit.beta_sub).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Cuee, GaussianEstimatorsAreExact) {
  const Family fam = Family::gaussian();
  const sim::EeDataset d = dataset(fam, 600, 49);
  CueeState cu = CueeState::empty(4);
  CeeState ce = CeeState::empty(4);
  for (Eigen::Index k = 0; k < 3; ++k) {
    const Matrix x = d.x.middleRows(200 * k, 200);
    const Vector y = d.y.segment(200 * k, 200);
    cu = cuee_update(cu, x, y, fam, CueeOptions{});
    ce = cee_update(ce, irls_solve(x, y, fam, IrlsConfig{}), CeeOptions{});
  }
  const Vector ls = oracle::batch_ls(d.x, d.y).beta;
  EXPECT_LT((cu.beta_tilde - ls).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((ce.beta - ls).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Cuee, GeneralizedInverseChoiceDoesNotMatter) {
  const Family fam = Family::logistic();
  sim::EeDataset d = dataset(fam, 800, 50);
  d.x.topRows(400).col(3).setZero();  // first two chunks lack covariate 3
  CueeState mp = CueeState::empty(4), rao = CueeState::empty(4);
  CueeOptions o_mp, o_rao;
  o_rao.irls.ginv = numkern::GinvKind::Rao;
  for (Eigen::Index k = 0; k < 4; ++k) {
    const Matrix x = d.x.middleRows(200 * k, 200);
    const Vector y = d.y.segment(200 * k, 200);
    mp = cuee_update(mp, x, y, fam, o_mp);
    rao = cuee_update(rao, x, y, fam, o_rao);
    if (k == 0) EXPECT_FALSE(mp.beta_available);
  }
  EXPECT_TRUE(mp.beta_available);
  EXPECT_LT((mp.beta_tilde - rao.beta_tilde).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Wald, CoefficientAndContrastTests) {
  Vector beta(3);
  beta << 1.0, -2.0, 0.5;
  Matrix v = Matrix::Identity(3, 3) * 0.25;
  v(0, 1) = v(1, 0) = 0.05;
  const auto coefs = wald_coef_tests(beta, v);
  EXPECT_DOUBLE_EQ(coefs[1].se, 0.5);
  EXPECT_DOUBLE_EQ(coefs[1].z, -4.0);
  EXPECT_NEAR(coefs[1].p_value, std::erfc(4.0 / std::sqrt(2.0)), 1e-14);

  Matrix c = Matrix::Zero(2, 3);
  c(0, 1) = 1.0;
  c(1, 2) = 1.0;
  const WaldTest w = wald_test(beta, v, c);
  EXPECT_NEAR(w.w, (4.0 + 0.25) / 0.25, 1e-12);
  EXPECT_EQ(w.df, 2u);
  Matrix dup = Matrix::Zero(2, 3);
  dup(0, 1) = dup(1, 1) = 1.0;
  EXPECT_STREAMSTAT_ERROR(wald_test(beta, v, dup), ErrorCode::RankDeficientContrast);
}
