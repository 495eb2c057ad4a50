#pragma once

// Desk-scale Monte-Carlo experiments. Every runner is deterministic in
// (config, seed): replicate r of cell c draws from make_rng(derive_seed(seed, c), r)
// and results are reduced in replicate order.

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "streamstat/sim/generators.hpp"

namespace streamstat::sim {

struct RunnerBase {
  std::size_t reps = 100;
  std::uint64_t seed = 20160101;
  std::size_t workers = 0;  // 0: worker_count()
};

/// Proportion with its binomial standard error.
struct Proportion {
  double value = 0.0;
  double se = 0.0;
};

/// Mean with its standard error.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// Power and size of the global outlier tests.

struct PowerStudyConfig : RunnerBase {
  std::vector<std::size_t> k_star{5, 10, 25, 100};
  std::vector<std::size_t> n_k{100, 500};
  std::vector<double> delta{0.0, 2.0, 4.0, 6.0};
  std::vector<ErrorKind> errors{ErrorKind::Normal, ErrorKind::SkewT};
  std::size_t m = 2;
  double alpha = 0.05;
  OutlierSimConfig base;

  PowerStudyConfig() { reps = 500; }
};

struct PowerCell {
  ErrorKind error = ErrorKind::Normal;
  double delta = 0.0;
  std::size_t n_k = 0;
  std::size_t k_star = 0;
  std::size_t reps = 0;
  Proportion normal_f;
  Proportion asymptotic_f;
};

std::vector<PowerCell> run_power_study(const PowerStudyConfig& cfg);
void write_power_csv(std::ostream& out, const std::vector<PowerCell>& cells);

// False positives / negatives of the individual outlier tests.

struct FpFnConfig : RunnerBase {
  std::vector<std::size_t> k_star{2, 5, 10, 25, 100};
  std::vector<std::size_t> n_k{100, 500};
  std::vector<double> delta{0.0, 2.0, 4.0, 6.0};
  double fdr_alpha = 0.10;
  OutlierSimConfig base;

  FpFnConfig() { reps = 500; }
};

struct FpFnCell {
  std::size_t n_k = 0;
  std::size_t k_star = 0;
  double delta = 0.0;
  std::size_t reps = 0;
  MeanSe fp_predictive;
  MeanSe fn_predictive;
  MeanSe fp_studentized;
  MeanSe fn_studentized;
};

std::vector<FpFnCell> run_fpfn_study(const FpFnConfig& cfg);
void write_fpfn_csv(std::ostream& out, const std::vector<FpFnCell>& cells);

// RMSE of the terminal CEE and CUEE estimates against the number of chunks.

struct RmseVsKConfig : RunnerBase {
  std::size_t n_total = 20000;
  std::vector<std::size_t> k_grid{10, 50, 200, 1000};
  Vector beta = Vector::Ones(6);
  std::vector<CovariateSpec> covariates{CovariateSpec::bernoulli(0.5), CovariateSpec::bernoulli(0.5),
                                        CovariateSpec::bernoulli(0.5), CovariateSpec::normal(),
                                        CovariateSpec::normal()};

  RmseVsKConfig() { reps = 50; }
};

struct RmseVsKRow {
  std::size_t k = 0;
  std::size_t reps = 0;
  MeanSe rmse_cee;
  MeanSe rmse_cuee;
  MeanSe merged_chunks;  // chunks held back for separation per replicate
};

std::vector<RmseVsKRow> run_rmse_vs_k(const RmseVsKConfig& cfg);
void write_rmse_vs_k_csv(std::ostream& out, const std::vector<RmseVsKRow>& rows);

// Bias and RMSE ratios of CEE and CUEE against the pooled EE fit (Poisson).

struct PoissonBiasConfig : RunnerBase {
  std::size_t k = 100;
  std::vector<std::size_t> n_k{50, 100, 500};
  Vector beta = (Vector(5) << 0.3, -0.3, 0.3, -0.3, 0.3).finished();
  std::vector<CovariateSpec> covariates{CovariateSpec::normal(), CovariateSpec::normal(),
                                        CovariateSpec::bernoulli(0.25), CovariateSpec::bernoulli(0.1)};

  PoissonBiasConfig() { reps = 100; }
};

enum class Method { Cee, Cuee, Ee };
std::string to_string(Method m);

struct PoissonBiasCell {
  std::size_t n_k = 0;
  Method method = Method::Ee;
  std::size_t coefficient = 0;  // 1-based
  std::size_t reps = 0;
  MeanSe bias;
  double rmse = 0.0;
  double rmse_ratio = 1.0;  // RMSE(method) / RMSE(EE)
  double ratio_se = 0.0;    // delta method
  MeanSe se_estimate;       // mean reported standard error
};

struct PoissonBiasResult {
  std::vector<PoissonBiasCell> cells;
  // Per-replicate biases for plotting: one row per (n_k, rep, method).
  struct RepBias {
    std::size_t n_k;
    std::size_t rep;
    Method method;
    Vector bias;
  };
  std::vector<RepBias> rep_biases;
};

PoissonBiasResult run_poisson_bias(const PoissonBiasConfig& cfg);
/// Ratio table: one row per (n_k, method) with beta1..betaP ratios and se columns.
void write_poisson_ratio_csv(std::ostream& out, const PoissonBiasResult& r);
/// Long form: bias, rmse and ratios per coefficient.
void write_poisson_detail_csv(std::ostream& out, const PoissonBiasResult& r);
void write_poisson_reps_csv(std::ostream& out, const PoissonBiasResult& r);

// CUEE under two generalized inverses on rank-deficient orderings.

struct GinvInvarianceConfig : RunnerBase {
  std::size_t n_total = 20000;
  std::size_t k = 10;
  Vector beta = Vector::Ones(5);
  std::vector<CovariateSpec> covariates{CovariateSpec::bernoulli(0.5), CovariateSpec::normal(), CovariateSpec::normal(),
                                        CovariateSpec::normal()};
  std::size_t sort_column = 1;  // rows are grouped by this binary column

  GinvInvarianceConfig() { reps = 100; }
};

struct GinvInvarianceRow {
  std::size_t coefficient = 0;  // 1-based
  std::size_t reps = 0;
  MeanSe cuee_mp;
  MeanSe se_mp;
  MeanSe cuee_rao;
  MeanSe se_rao;
  MeanSe cuee_full_rank;
  MeanSe se_full_rank;
  MeanSe ee;
  MeanSe se_ee;
  double max_abs_diff = 0.0;  // max over replicates of |MP - Rao|
};

struct GinvInvarianceResult {
  std::vector<GinvInvarianceRow> rows;
  double rank_deficient_chunk_share = 0.0;  // share of chunks fitted with a g-inverse
};

GinvInvarianceResult run_ginv_invariance(const GinvInvarianceConfig& cfg);
void write_ginv_invariance_csv(std::ostream& out, const GinvInvarianceResult& r);

// Generator validation shared by all runners.

struct GeneratorCheckRow {
  std::string runner;
  MomentCheck check;
};
void write_generator_check_csv(std::ostream& out, const std::vector<GeneratorCheckRow>& rows);

/// Moment checks of the first replicate's design for each runner.
std::vector<GeneratorCheckRow> generator_checks_outlier(const OutlierSimConfig& base, std::uint64_t seed);
std::vector<GeneratorCheckRow> generator_checks_ee(const std::string& runner, const ee::Family& family,
                                                   const Vector& beta, const std::vector<CovariateSpec>& covariates,
                                                   std::size_t n, std::uint64_t seed);

// JSON configs: absent keys keep their defaults; unknown keys are rejected.

PowerStudyConfig power_config_from_json(const nlohmann::json& j);
FpFnConfig fpfn_config_from_json(const nlohmann::json& j);
RmseVsKConfig rmse_vs_k_config_from_json(const nlohmann::json& j);
PoissonBiasConfig poisson_bias_config_from_json(const nlohmann::json& j);
GinvInvarianceConfig ginv_invariance_config_from_json(const nlohmann::json& j);

}  // namespace streamstat::sim
