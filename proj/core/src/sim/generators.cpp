#include "streamstat/sim/generators.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "streamstat/error.hpp"

namespace streamstat::sim {

SkewTMoments skew_t_moments(double nu, double gamma) {
  if (!(nu > 2.0)) fail(ErrorCode::InvalidNu, "skew-t needs nu > 2 for a finite variance");
  if (!(gamma > 0.0)) fail(ErrorCode::InvalidConfig, "skew-t gamma must be > 0");
  // E|T| for T ~ t_nu.
  const double abs_mean = 2.0 * std::sqrt(nu) * std::exp(std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0)) /
                          (std::sqrt(std::numbers::pi) * (nu - 1.0));
  const double g2 = gamma * gamma;
  SkewTMoments m;
  m.m1 = abs_mean * (gamma - 1.0 / gamma);
  m.m2 = nu / (nu - 2.0) * (g2 * g2 - g2 + 1.0) / g2;
  return m;
}

double draw_skew_t(Rng& rng, double nu, double gamma, const SkewTMoments& moments) {
  std::student_t_distribution<double> t(nu);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double a = std::fabs(t(rng));
  const double g2 = gamma * gamma;
  const double x = u(rng) < g2 / (1.0 + g2) ? gamma * a : -a / gamma;
  return (x - moments.m1) / std::sqrt(moments.variance());
}

Vector gen_skew_t(double nu, double gamma, std::size_t n, std::uint64_t seed) {
  const SkewTMoments m = skew_t_moments(nu, gamma);
  Rng rng = make_rng(seed, 0);
  Vector out(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = draw_skew_t(rng, nu, gamma, m);
  return out;
}

std::string to_string(ErrorKind k) { return k == ErrorKind::Normal ? "normal" : "skew_t"; }

ErrorKind error_kind_from_string(const std::string& s) {
  if (s == "normal") return ErrorKind::Normal;
  if (s == "skew_t") return ErrorKind::SkewT;
  fail(ErrorCode::InvalidConfig, "error kind must be normal or skew_t, got '" + s + "'");
}

std::vector<LabeledChunk> gen_outlier_stream(const OutlierSimConfig& cfg, Rng& rng) {
  if (cfg.k_star < 1 || cfg.n_k < 1) fail(ErrorCode::InvalidConfig, "k_star and n_k must be >= 1");
  if (!(cfg.delta >= 0.0)) fail(ErrorCode::InvalidConfig, "delta must be >= 0");
  if (!(cfg.contamination_rate >= 0.0 && cfg.contamination_rate <= 1.0)) {
    fail(ErrorCode::InvalidConfig, "contamination_rate must lie in [0, 1]");
  }
  const Eigen::Index p = cfg.beta.size();
  const auto n = static_cast<Eigen::Index>(cfg.n_k);
  SkewTMoments moments;
  if (cfg.error_kind == ErrorKind::SkewT) moments = skew_t_moments(cfg.nu, cfg.gamma);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  std::bernoulli_distribution contaminate(cfg.contamination_rate);

  std::vector<LabeledChunk> chunks(cfg.k_star);
  for (std::size_t k = 0; k < cfg.k_star; ++k) {
    const bool target = k + 1 == cfg.k_star;
    LabeledChunk& c = chunks[k];
    c.x.resize(n, p);
    c.y.resize(n);
    c.outlier.assign(cfg.n_k, false);
    for (Eigen::Index i = 0; i < n; ++i) {
      c.x(i, 0) = 1.0;
      for (Eigen::Index j = 1; j < p; ++j) c.x(i, j) = normal(rng);
      const double e = cfg.error_kind == ErrorKind::Normal ? normal(rng)
                                                            : draw_skew_t(rng, cfg.nu, cfg.gamma, moments);
      double shift = 0.0;
      if (target) {
        const bool b = contaminate(rng);
        const double eta = expo(rng);
        if (b) {
          shift = cfg.delta * eta;
          c.outlier[static_cast<std::size_t>(i)] = cfg.delta > 0.0;
        }
      }
      c.y(i) = c.x.row(i).dot(cfg.beta) + e + shift;
    }
  }
  return chunks;
}

double CovariateSpec::mu4() const {
  if (kind == Kind::Normal) return 3.0;
  const double q = 1.0 - prob;
  return prob * q * (1.0 - 3.0 * prob * q);
}

EeDataset gen_ee_dataset(const ee::Family& family, const Vector& beta, const std::vector<CovariateSpec>& covariates,
                         std::size_t n, Rng& rng) {
  const auto p = static_cast<Eigen::Index>(covariates.size() + 1);
  if (beta.size() != p) fail(ErrorCode::DimensionMismatch, "beta length must be 1 + number of covariates");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  EeDataset d;
  const auto rows = static_cast<Eigen::Index>(n);
  d.x.resize(rows, p);
  d.y.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    d.x(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < p; ++j) {
      const CovariateSpec& c = covariates[static_cast<std::size_t>(j - 1)];
      d.x(i, j) = c.kind == CovariateSpec::Kind::Normal ? normal(rng) : (unif(rng) < c.prob ? 1.0 : 0.0);
    }
  }
  const Vector eta = d.x * beta;
  const ee::FamilyEval fe = family.eval(eta);
  for (Eigen::Index i = 0; i < rows; ++i) {
    switch (family.kind()) {
      case ee::Family::Kind::Logistic:
        d.y(i) = unif(rng) < fe.mu(i) ? 1.0 : 0.0;
        break;
      case ee::Family::Kind::Poisson:
        d.y(i) = static_cast<double>(std::poisson_distribution<long>(fe.mu(i))(rng));
        break;
      case ee::Family::Kind::Gaussian:
      case ee::Family::Kind::Quasi:
        d.y(i) = fe.mu(i) + normal(rng);
        break;
    }
  }
  return d;
}

std::vector<MomentCheck> check_covariate_moments(const Matrix& x, const std::vector<CovariateSpec>& covariates,
                                                 double z_limit) {
  if (static_cast<std::size_t>(x.cols()) != covariates.size() + 1) {
    fail(ErrorCode::DimensionMismatch, "design must be intercept + covariates");
  }
  const auto n = static_cast<double>(x.rows());
  std::vector<MomentCheck> out;
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    const CovariateSpec& c = covariates[j];
    const Vector col = x.col(static_cast<Eigen::Index>(j + 1));
    MomentCheck m;
    m.column = j + 1;
    m.expected_mean = c.mean();
    m.expected_var = c.variance();
    m.sample_mean = col.mean();
    m.sample_var = (col.array() - m.sample_mean).square().sum() / (n - 1.0);
    const double se_mean = std::sqrt(m.expected_var / n);
    const double se_var = std::sqrt((c.mu4() - m.expected_var * m.expected_var) / n);
    m.z_mean = se_mean > 0.0 ? (m.sample_mean - m.expected_mean) / se_mean : 0.0;
    m.z_var = se_var > 0.0 ? (m.sample_var - m.expected_var) / se_var : 0.0;
    m.pass = std::fabs(m.z_mean) <= z_limit && std::fabs(m.z_var) <= z_limit;
    out.push_back(m);
  }
  return out;
}

}  // namespace streamstat::sim
