#include "streamstat/lm_stream.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "streamstat/distributions.hpp"
#include "streamstat/error.hpp"

namespace streamstat::lm {

namespace {

void require_p(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    fail(ErrorCode::DimensionMismatch, std::string(what) + ": model has p = " + std::to_string(expected) +
                                           " but input has " + std::to_string(got) + " columns");
  }
}

bool full_rank(const Matrix& a, double rank_tol) {
  return numkern::rank_detect(a, rank_tol) == static_cast<std::size_t>(a.rows());
}

// SSE_{k-1} + beta_{k-1}' V_{k-1} beta_{k-1}; equals S_yy,k-1 whenever
// V_{k-1} beta_{k-1} = W_{k-1}, which is what deferral mode relies on.
double sse_carry(const LmState& prev) {
  if (!prev.beta_available) return prev.s_yy;
  return prev.sse + prev.beta.dot(prev.v * prev.beta);
}

void accumulate(LmState& next, const ChunkSummary& chunk) {
  next.w += chunk.xty;
  next.n_total += chunk.n;
  next.s_yy += chunk.yty;
  next.s_y += chunk.ysum;
  ++next.chunks_seen;
}

}  // namespace

LmState LmState::empty(std::size_t p) {
  LmState s;
  s.p = p;
  const auto n = static_cast<Eigen::Index>(p);
  s.v = Matrix::Zero(n, n);
  s.w = Vector::Zero(n);
  s.beta = Vector::Zero(n);
  return s;
}

Matrix LmState::data_v() const {
  if (!ridge_active()) return v;
  return v - ridge->lambda * Matrix::Identity(v.rows(), v.cols());
}

double LmState::residual_df() const {
  return static_cast<double>(n_total) - static_cast<double>(p);
}

double LmState::mse() const {
  if (!(residual_df() > 0.0)) fail(ErrorCode::InsufficientData, "N_k <= p, MSE undefined");
  return sse / residual_df();
}

ChunkSummary summarize_chunk(const Matrix& x, const Vector& y, numkern::GinvKind ginv, double rank_tol) {
  if (x.rows() != y.size()) {
    fail(ErrorCode::DimensionMismatch, "summarize_chunk: X has " + std::to_string(x.rows()) +
                                           " rows but y has " + std::to_string(y.size()));
  }
  if (x.rows() == 0) fail(ErrorCode::InsufficientData, "summarize_chunk: empty chunk");

  ChunkSummary c;
  c.n = static_cast<std::size_t>(x.rows());
  c.xtx = numkern::symmetrize(x.transpose() * x);
  c.xty = x.transpose() * y;
  c.yty = y.squaredNorm();
  c.ysum = y.sum();
  c.rank = numkern::rank_detect(c.xtx, rank_tol);
  if (c.rank == c.p()) {
    c.beta_sub = numkern::chol_solve(c.xtx, c.xty);
  } else {
    c.beta_sub = numkern::ginv(c.xtx, ginv, rank_tol) * c.xty;
  }
  c.sse_sub = std::max(0.0, c.yty - c.beta_sub.dot(c.xty));
  return c;
}

LmState lm_update(const LmState& state, const ChunkSummary& chunk, double rank_tol) {
  require_p(state.p, chunk.p(), "lm_update");
  LmState next = state;
  next.v = numkern::symmetrize(state.v + chunk.xtx);
  accumulate(next, chunk);

  if (!full_rank(next.v, rank_tol)) {
    next.beta_available = false;
    next.beta.setZero();
    next.sse = 0.0;
    return next;
  }
  next.beta = numkern::chol_solve(next.v, next.w);
  next.beta_available = true;
  const double sse = sse_carry(state) + chunk.yty - next.beta.dot(next.v * next.beta);
  next.sse = std::max(0.0, sse);
  return next;
}

LmState lm_init_ridge(std::size_t p, double lambda) {
  if (!(lambda > 0.0)) fail(ErrorCode::NonPositiveLambda, "ridge lambda must be > 0");
  LmState s = LmState::empty(p);
  s.v = lambda * Matrix::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  s.ridge = Ridge{lambda, true};
  s.beta_available = true;
  return s;
}

bool debias_ready(const LmState& state, const ChunkSummary& chunk, double rank_tol) {
  require_p(state.p, chunk.p(), "debias_ready");
  return full_rank(numkern::symmetrize(state.data_v() + chunk.xtx), rank_tol);
}

LmState lm_debias(const LmState& state, const ChunkSummary& chunk_kappa, double rank_tol) {
  require_p(state.p, chunk_kappa.p(), "lm_debias");
  if (!state.ridge_active()) fail(ErrorCode::InvalidConfig, "lm_debias: no active ridge start");

  LmState next = state;
  next.v = numkern::symmetrize(state.data_v() + chunk_kappa.xtx);
  if (!full_rank(next.v, rank_tol)) {
    fail(ErrorCode::StillDeficient, "cumulative design without the ridge term is still singular");
  }
  accumulate(next, chunk_kappa);
  next.beta = numkern::chol_solve(next.v, next.w);
  next.beta_available = true;
  const double sse = sse_carry(state) + chunk_kappa.yty - next.beta.dot(next.v * next.beta);
  next.sse = std::max(0.0, sse);
  next.ridge->active = false;
  return next;
}

AnovaTable anova(const LmState& state) {
  if (state.n_total <= state.p) {
    fail(ErrorCode::InsufficientData, "ANOVA needs N_k > p (N_k = " + std::to_string(state.n_total) + ")");
  }
  if (!state.beta_available) fail(ErrorCode::SingularCumulative, "cumulative design is singular");

  AnovaTable t;
  const double n = static_cast<double>(state.n_total);
  const double p = static_cast<double>(state.p);
  t.df_regression = p - 1.0;
  t.df_error = n - p;
  t.df_total = n - 1.0;
  t.sse = state.sse;
  t.sst = std::max(0.0, state.s_yy - state.s_y * state.s_y / n);
  t.ssr = t.sst - t.sse;
  t.mse = t.sse / t.df_error;
  t.msr = t.df_regression > 0.0 ? t.ssr / t.df_regression : 0.0;

  const double scale = std::max(1.0, std::fabs(state.s_yy));
  t.degenerate = t.sst <= 1e-14 * scale;
  if (t.degenerate) {
    t.f_stat = 0.0;
    t.p_value = 1.0;
    t.r_squared = 0.0;
    return t;
  }
  t.r_squared = t.ssr / t.sst;
  if (t.df_regression > 0.0) {
    t.f_stat = t.mse > 0.0 ? t.msr / t.mse : std::numeric_limits<double>::infinity();
    t.p_value = dist::f_upper_p(t.f_stat, t.df_regression, t.df_error);
  }
  return t;
}

std::vector<CoefTest> coef_t_tests(const LmState& state) {
  if (!state.beta_available) fail(ErrorCode::SingularCumulative, "cumulative design is singular");
  const double mse = state.mse();
  const Matrix vinv = numkern::SpdFactor(state.v).inverse();
  const double df = state.residual_df();

  std::vector<CoefTest> out(state.p);
  for (std::size_t j = 0; j < state.p; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    CoefTest& c = out[j];
    c.estimate = state.beta(jj);
    c.se = std::sqrt(mse * vinv(jj, jj));
    if (c.estimate == 0.0) {
      c.t = 0.0;
    } else {
      c.t = c.se > 0.0 ? c.estimate / c.se : std::copysign(std::numeric_limits<double>::infinity(), c.estimate);
    }
    c.p_value = dist::t_two_sided_p(c.t, df);
  }
  return out;
}

FTest glh_f_test(const LmState& state, const Matrix& contrast) {
  require_p(state.p, static_cast<std::size_t>(contrast.cols()), "glh_f_test");
  if (!state.beta_available) fail(ErrorCode::SingularCumulative, "cumulative design is singular");
  const auto q = static_cast<std::size_t>(contrast.rows());
  if (q == 0 || q > state.p || numkern::rank_detect(contrast) != q) {
    fail(ErrorCode::RankDeficientContrast, "contrast matrix must have full row rank q <= p");
  }
  const double mse = state.mse();
  const Vector cb = contrast * state.beta;

  FTest f;
  f.df1 = static_cast<double>(q);
  f.df2 = state.residual_df();
  if (cb.squaredNorm() == 0.0) {
    f.f_stat = 0.0;
    f.p_value = 1.0;
    return f;
  }
  const Matrix vinv = numkern::SpdFactor(state.v).inverse();
  const Matrix middle = contrast * vinv * contrast.transpose();
  const double quad = cb.dot(numkern::chol_solve(middle, cb));
  f.f_stat = mse > 0.0 ? (quad / f.df1) / mse : std::numeric_limits<double>::infinity();
  f.p_value = dist::f_upper_p(f.f_stat, f.df1, f.df2);
  return f;
}

}  // namespace streamstat::lm
