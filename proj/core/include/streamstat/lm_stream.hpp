#pragma once

// Online-updated normal linear model.
//
// Only (V_k, W_k, beta_k, SSE_k, N_k, S_yy, S_y) survive between chunks; the
// update for chunk k reads the previous state and the chunk summary only.

#include <cstddef>
#include <optional>
#include <vector>

#include "streamstat/numkern.hpp"

namespace streamstat::lm {

/// Sufficient statistics of one chunk plus its own least-squares fit.
struct ChunkSummary {
  Matrix xtx;
  Vector xty;
  double yty = 0.0;
  double ysum = 0.0;
  std::size_t n = 0;
  Vector beta_sub;
  double sse_sub = 0.0;
  std::size_t rank = 0;

  std::size_t p() const { return static_cast<std::size_t>(xty.size()); }
};

struct Ridge {
  double lambda = 0.0;
  bool active = false;
};

struct LmState {
  std::size_t p = 0;
  Matrix v;  // includes lambda * I while a ridge start is active
  Vector w;
  Vector beta;
  // false while V_k is singular (deferral mode); beta and sse are then
  // placeholders and must not be reported.
  bool beta_available = false;
  double sse = 0.0;
  std::size_t n_total = 0;
  double s_yy = 0.0;
  double s_y = 0.0;
  std::size_t chunks_seen = 0;
  std::optional<Ridge> ridge;

  static LmState empty(std::size_t p);

  bool ridge_active() const { return ridge && ridge->active; }
  /// V_k with any active ridge term removed.
  Matrix data_v() const;
  double residual_df() const;
  double mse() const;
};

ChunkSummary summarize_chunk(const Matrix& x, const Vector& y,
                             numkern::GinvKind ginv = numkern::GinvKind::MoorePenrose,
                             double rank_tol = 0.0);

/// beta_k = V_k^{-1}(X_k'y_k + W_{k-1}),
/// SSE_k = SSE_{k-1} + y_k'y_k + beta_{k-1}'V_{k-1}beta_{k-1} - beta_k'V_k beta_k.
/// Never throws on a singular V_k; the result is flagged instead.
LmState lm_update(const LmState& state, const ChunkSummary& chunk, double rank_tol = 0.0);

/// Start state with V_0 = lambda * I and beta_0 = 0.
LmState lm_init_ridge(std::size_t p, double lambda);

/// Absorbs chunk kappa and removes V_0 from the cumulative design.
LmState lm_debias(const LmState& state, const ChunkSummary& chunk_kappa, double rank_tol = 0.0);

/// True when absorbing `chunk` would make V - V_0 full rank.
bool debias_ready(const LmState& state, const ChunkSummary& chunk, double rank_tol = 0.0);

struct AnovaTable {
  double df_regression = 0.0;
  double df_error = 0.0;
  double df_total = 0.0;
  double ssr = 0.0;
  double sse = 0.0;
  double sst = 0.0;
  double msr = 0.0;
  double mse = 0.0;
  double f_stat = 0.0;
  double p_value = 1.0;
  double r_squared = 0.0;
  // SST == 0: F and R^2 are undefined and reported as 0 / 1.
  bool degenerate = false;
};

/// Online ANOVA table; assumes the model carries an intercept column.
AnovaTable anova(const LmState& state);

struct CoefTest {
  double estimate = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p_value = 1.0;
};

std::vector<CoefTest> coef_t_tests(const LmState& state);

struct FTest {
  double f_stat = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;
  double p_value = 1.0;
};

/// General linear hypothesis H0: C beta = 0.
FTest glh_f_test(const LmState& state, const Matrix& contrast);

}  // namespace streamstat::lm
