#pragma once

// Online-updated estimating equations: per-chunk IRLS fits combined by the
// cumulative (CEE) and cumulatively updated (CUEE) estimators.

#include <cstddef>
#include <span>
#include <vector>

#include "streamstat/family.hpp"
#include "streamstat/numkern.hpp"

namespace streamstat::ee {

struct IrlsConfig {
  double tol = 1e-8;  // on max |eta^(t) - eta^(t-1)|
  int max_iter = 50;
  numkern::GinvKind ginv = numkern::GinvKind::MoorePenrose;
  double rank_tol = 0.0;
  // Start subset solves from the current cumulative estimate instead of 0.
  bool warm_start = false;
};

enum class FitStatus { Converged, NotConverged, Separation };

struct SubsetFit {
  Vector beta_sub;
  Matrix a_mat;  // A(beta_sub) = X' diag(S^2 W) X
  Matrix meat;   // sum psi psi' at beta_sub
  Matrix v_sub;  // A^- meat A^-'
  std::size_t rank = 0;
  bool converged = false;
  int iterations = 0;
  FitStatus status = FitStatus::NotConverged;
  std::size_t n = 0;

  std::size_t p() const { return static_cast<std::size_t>(beta_sub.size()); }
  bool full_rank() const { return rank == p(); }
};

/// Never throws for non-convergence or separation; `status` reports them and
/// `beta_sub` holds the last iterate.
SubsetFit irls_solve(const Matrix& x, const Vector& y, const Family& family, const IrlsConfig& cfg,
                     const Vector* beta_init = nullptr);

/// Throws Error(NotConverged) or Error(Separation) for an unusable fit.
void require_converged(const SubsetFit& fit);

struct ScoreEval {
  Vector m_vec;  // X' S W (y - mu)
  Matrix a_mat;  // -dM/dbeta
};

ScoreEval score_eval(const Matrix& x, const Vector& y, const Family& family, const Vector& beta);

/// Q = sum_i psi_i psi_i'.
Matrix score_meat(const Matrix& x, const Vector& y, const Family& family, const Vector& beta);

enum class VarianceKind { ModelBased, Robust };

/// Robust for Poisson and quasi families, model-based otherwise.
VarianceKind default_variance(const Family& family);

/// The chunk a fit came from; needed only for the robust rank-deficient meat.
struct ChunkData {
  const Matrix* x = nullptr;
  const Vector* y = nullptr;
  const Family* family = nullptr;
};

struct CeeState {
  std::size_t p = 0;
  Matrix a_cum;
  Vector beta;
  Matrix v;
  // false while a_cum is singular; beta then uses the configured g-inverse.
  bool beta_available = false;
  std::size_t chunks_seen = 0;
  std::size_t n_total = 0;

  static CeeState empty(std::size_t p);
};

struct CeeOptions {
  VarianceKind variance = VarianceKind::ModelBased;
  numkern::GinvKind ginv = numkern::GinvKind::MoorePenrose;
  double rank_tol = 0.0;
};

/// beta_k = A_k^{-1}(A_{k-1} beta_{k-1} + A_n beta_n),
/// V_k = A_k^{-1}(A_{k-1} V_{k-1} A_{k-1}' + meat) A_k^{-1}'.
/// A robust update with a rank-deficient fit needs `chunk` to evaluate the
/// meat at beta_k.
CeeState cee_update(const CeeState& state, const SubsetFit& fit, const CeeOptions& opts,
                    const ChunkData& chunk = {});

struct CueeState {
  std::size_t p = 0;
  Matrix a_tilde_cum;
  Vector a_vec;
  Vector b_vec;
  Vector beta_check;
  Vector beta_tilde;
  Matrix v_tilde;
  bool beta_available = false;
  std::size_t chunks_seen = 0;
  std::size_t n_total = 0;

  static CueeState empty(std::size_t p);
};

struct CueeOptions {
  VarianceKind variance = VarianceKind::ModelBased;
  IrlsConfig irls;
};

/// Fits the chunk, forms the intermediary estimator beta_check, evaluates
/// A and M there and updates beta_tilde. Throws Separation or NotConverged
/// without touching the state.
CueeState cuee_update(const CueeState& state, const Matrix& x, const Vector& y, const Family& family,
                      const CueeOptions& opts);

/// CUEE update with a precomputed subset fit of (x, y).
CueeState cuee_update(const CueeState& state, const SubsetFit& fit, const Matrix& x, const Vector& y,
                      const Family& family, const CueeOptions& opts);

/// One-shot AEE combination of stored subset fits: beta = (sum A)^{-1} sum A beta_n,
/// V = (sum A)^{-1} (sum A V_n A') (sum A)^{-1}'.
struct AeeResult {
  Vector beta;
  Matrix v;
};
AeeResult aee_combine(std::span<const SubsetFit> fits, numkern::GinvKind ginv = numkern::GinvKind::MoorePenrose,
                      double rank_tol = 0.0);

struct WaldCoef {
  double estimate = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p_value = 1.0;
};

/// z_j = beta_j / sqrt(v_jj), p from chi^2_1 on z_j^2.
std::vector<WaldCoef> wald_coef_tests(const Vector& beta, const Matrix& v);

struct WaldTest {
  double w = 0.0;
  std::size_t df = 0;
  double p_value = 1.0;
};

/// w = beta' C' (C V C')^{-1} C beta ~ chi^2_q.
WaldTest wald_test(const Vector& beta, const Matrix& v, const Matrix& contrast);

}  // namespace streamstat::ee
