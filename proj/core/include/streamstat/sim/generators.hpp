#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "streamstat/family.hpp"
#include "streamstat/numkern.hpp"
#include "streamstat/sim/rng.hpp"

namespace streamstat::sim {

// First two raw moments of the two-piece skew-t with nu = 3, gamma = 1.5,
// obtained by numerical integration of its density
// (tools/derive_skew_t_constants.py).
inline constexpr double kSkewTNu3Gamma15Mean = 0.91888149236965355;
inline constexpr double kSkewTNu3Gamma15SecondMoment = 5.0833333333333339;

struct SkewTMoments {
  double m1 = 0.0;
  double m2 = 0.0;

  double variance() const { return m2 - m1 * m1; }
};

/// Closed-form moments of the two-piece law with density
/// 2/(gamma + 1/gamma) f(gamma x) for x < 0 and 2/(gamma + 1/gamma) f(x/gamma)
/// for x >= 0, f the t_nu density. Throws InvalidNu unless nu > 2.
SkewTMoments skew_t_moments(double nu, double gamma);

/// One draw standardized to mean 0 and variance 1.
double draw_skew_t(Rng& rng, double nu, double gamma, const SkewTMoments& moments);

/// n standardized skew-t draws from stream 0 of `seed`.
Vector gen_skew_t(double nu, double gamma, std::size_t n, std::uint64_t seed);

enum class ErrorKind { Normal, SkewT };

std::string to_string(ErrorKind k);
ErrorKind error_kind_from_string(const std::string& s);

struct OutlierSimConfig {
  Vector beta = (Vector(5) << 1, 2, 3, 4, 5).finished();
  std::size_t k_star = 5;
  std::size_t n_k = 100;
  double delta = 0.0;
  ErrorKind error_kind = ErrorKind::Normal;
  double nu = 3.0;
  double gamma = 1.5;
  double contamination_rate = 0.05;
};

struct LabeledChunk {
  Matrix x;
  Vector y;
  std::vector<bool> outlier;
};

/// Chunks 1..k_star of y = x'beta + e + b delta eta with an intercept and
/// N(0, I) covariates; b ~ Bernoulli(rate) in chunk k_star only,
/// eta ~ Exp(1). Rows are labelled outliers when b = 1 and delta > 0.
std::vector<LabeledChunk> gen_outlier_stream(const OutlierSimConfig& cfg, Rng& rng);

struct CovariateSpec {
  enum class Kind { Normal, Bernoulli };
  Kind kind = Kind::Normal;
  double prob = 0.5;

  static CovariateSpec normal() { return {Kind::Normal, 0.0}; }
  static CovariateSpec bernoulli(double p) { return {Kind::Bernoulli, p}; }
  double mean() const { return kind == Kind::Normal ? 0.0 : prob; }
  double variance() const { return kind == Kind::Normal ? 1.0 : prob * (1.0 - prob); }
  /// Fourth central moment.
  double mu4() const;
};

struct EeDataset {
  Matrix x;  // intercept column first
  Vector y;
};

/// Responses from the family's mean at x'beta: Bernoulli for logistic,
/// Poisson for poisson, N(mu, 1) for gaussian.
EeDataset gen_ee_dataset(const ee::Family& family, const Vector& beta, const std::vector<CovariateSpec>& covariates,
                         std::size_t n, Rng& rng);

struct MomentCheck {
  std::size_t column = 0;
  double expected_mean = 0.0;
  double sample_mean = 0.0;
  double expected_var = 0.0;
  double sample_var = 0.0;
  double z_mean = 0.0;
  double z_var = 0.0;
  bool pass = true;
};

/// Compares each covariate column (after the intercept) with its analytic
/// mean and variance; a column passes when both |z| <= z_limit.
std::vector<MomentCheck> check_covariate_moments(const Matrix& x, const std::vector<CovariateSpec>& covariates,
                                                 double z_limit = 4.0);

}  // namespace streamstat::sim
