#include "streamstat/ee_stream.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "streamstat/distributions.hpp"
#include "streamstat/error.hpp"

namespace streamstat::ee {

namespace {

// Consecutive non-converged iterations with pinned probabilities before a
// logistic fit is declared separated.
constexpr int kSeparationPatience = 5;

void require_p(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    fail(ErrorCode::DimensionMismatch,
         std::string(what) + ": expected p = " + std::to_string(expected) + ", got " + std::to_string(got));
  }
}

void require_chunk(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) fail(ErrorCode::DimensionMismatch, "X and y row counts differ");
  if (x.rows() == 0) fail(ErrorCode::InsufficientData, "empty chunk");
}

Matrix weighted_gram(const Matrix& x, const Vector& w) {
  return numkern::symmetrize(x.transpose() * w.asDiagonal() * x);
}

Vector score_residual(const FamilyEval& f, const Vector& y) { return f.sw.cwiseProduct(y - f.mu); }

Matrix sandwich(const Matrix& bread_inv, const Matrix& meat) {
  return numkern::symmetrize(bread_inv * meat * bread_inv.transpose());
}

}  // namespace

SubsetFit irls_solve(const Matrix& x, const Vector& y, const Family& family, const IrlsConfig& cfg,
                     const Vector* beta_init) {
  require_chunk(x, y);
  const Eigen::Index p = x.cols();
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1) fail(ErrorCode::InvalidConfig, "IRLS needs tol > 0 and max_iter >= 1");

  SubsetFit fit;
  fit.n = static_cast<std::size_t>(x.rows());
  fit.beta_sub = Vector::Zero(p);
  if (beta_init != nullptr) {
    require_p(static_cast<std::size_t>(p), static_cast<std::size_t>(beta_init->size()), "irls_solve");
    fit.beta_sub = *beta_init;
  }

  Vector eta = x * fit.beta_sub;
  FamilyEval fe = family.eval(eta);
  int pinned_run = 0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Matrix a = weighted_gram(x, fe.s2w);
    const Vector rhs = x.transpose() * (fe.s2w.cwiseProduct(eta) + score_residual(fe, y));
    const Matrix g = numkern::inverse_or_ginv(a, cfg.ginv, cfg.rank_tol);
    const Vector beta_next = g * rhs;
    const Vector eta_next = x * beta_next;
    FamilyEval fe_next;
    try {
      fe_next = family.eval(eta_next);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DomainViolation) throw;
      fit.status = FitStatus::NotConverged;
      break;
    }
    const double delta = (eta_next - eta).cwiseAbs().maxCoeff();
    fit.beta_sub = beta_next;
    eta = eta_next;
    fe = std::move(fe_next);
    fit.iterations = it;
    if (delta < cfg.tol) {
      fit.status = FitStatus::Converged;
      break;
    }
    pinned_run = family.pinned(fe.mu) ? pinned_run + 1 : 0;
    if (pinned_run >= kSeparationPatience) {
      fit.status = FitStatus::Separation;
      break;
    }
  }
  fit.converged = fit.status == FitStatus::Converged;

  fit.a_mat = weighted_gram(x, fe.s2w);
  const Vector r = score_residual(fe, y);
  fit.meat = weighted_gram(x, r.cwiseAbs2());
  fit.rank = numkern::rank_detect(fit.a_mat, cfg.rank_tol);
  fit.v_sub = sandwich(numkern::inverse_or_ginv(fit.a_mat, cfg.ginv, cfg.rank_tol), fit.meat);
  return fit;
}

void require_converged(const SubsetFit& fit) {
  switch (fit.status) {
    case FitStatus::Converged:
      return;
    case FitStatus::Separation:
      fail(ErrorCode::Separation, "fitted probabilities pinned at 0/1 after " + std::to_string(fit.iterations) +
                                      " iterations");
    case FitStatus::NotConverged:
      fail(ErrorCode::NotConverged, "IRLS did not converge in " + std::to_string(fit.iterations) + " iterations");
  }
}

ScoreEval score_eval(const Matrix& x, const Vector& y, const Family& family, const Vector& beta) {
  require_chunk(x, y);
  require_p(static_cast<std::size_t>(x.cols()), static_cast<std::size_t>(beta.size()), "score_eval");
  if (!beta.allFinite()) fail(ErrorCode::DomainViolation, "score_eval: beta is not finite");
  const FamilyEval fe = family.eval(x * beta);
  return ScoreEval{x.transpose() * score_residual(fe, y), weighted_gram(x, fe.s2w)};
}

Matrix score_meat(const Matrix& x, const Vector& y, const Family& family, const Vector& beta) {
  require_chunk(x, y);
  require_p(static_cast<std::size_t>(x.cols()), static_cast<std::size_t>(beta.size()), "score_meat");
  const FamilyEval fe = family.eval(x * beta);
  return weighted_gram(x, score_residual(fe, y).cwiseAbs2());
}

VarianceKind default_variance(const Family& family) {
  return family.kind() == Family::Kind::Logistic ? VarianceKind::ModelBased : VarianceKind::Robust;
}

CeeState CeeState::empty(std::size_t p) {
  const auto n = static_cast<Eigen::Index>(p);
  CeeState s;
  s.p = p;
  s.a_cum = Matrix::Zero(n, n);
  s.beta = Vector::Zero(n);
  s.v = Matrix::Zero(n, n);
  return s;
}

CeeState cee_update(const CeeState& state, const SubsetFit& fit, const CeeOptions& opts, const ChunkData& chunk) {
  require_p(state.p, fit.p(), "cee_update");
  require_converged(fit);

  CeeState next = state;
  next.a_cum = numkern::symmetrize(state.a_cum + fit.a_mat);
  bool full = false;
  const Matrix g = numkern::inverse_or_ginv(next.a_cum, opts.ginv, opts.rank_tol, &full);
  next.beta = g * (state.a_cum * state.beta + fit.a_mat * fit.beta_sub);
  next.beta_available = full;
  next.n_total += fit.n;
  ++next.chunks_seen;

  if (opts.variance == VarianceKind::ModelBased) {
    next.v = numkern::symmetrize(g);
    return next;
  }
  Matrix meat;
  if (fit.full_rank()) {
    meat = fit.a_mat * fit.v_sub * fit.a_mat.transpose();
  } else {
    if (chunk.x == nullptr || chunk.y == nullptr || chunk.family == nullptr) {
      fail(ErrorCode::InvalidConfig, "robust CEE variance with a rank-deficient fit needs the chunk data");
    }
    meat = score_meat(*chunk.x, *chunk.y, *chunk.family, next.beta);
  }
  next.v = sandwich(g, state.a_cum * state.v * state.a_cum.transpose() + meat);
  return next;
}

CueeState CueeState::empty(std::size_t p) {
  const auto n = static_cast<Eigen::Index>(p);
  CueeState s;
  s.p = p;
  s.a_tilde_cum = Matrix::Zero(n, n);
  s.a_vec = Vector::Zero(n);
  s.b_vec = Vector::Zero(n);
  s.beta_check = Vector::Zero(n);
  s.beta_tilde = Vector::Zero(n);
  s.v_tilde = Matrix::Zero(n, n);
  return s;
}

CueeState cuee_update(const CueeState& state, const Matrix& x, const Vector& y, const Family& family,
                      const CueeOptions& opts) {
  require_p(state.p, static_cast<std::size_t>(x.cols()), "cuee_update");
  const bool warm = opts.irls.warm_start && state.beta_available;
  const SubsetFit fit = irls_solve(x, y, family, opts.irls, warm ? &state.beta_tilde : nullptr);
  return cuee_update(state, fit, x, y, family, opts);
}

CueeState cuee_update(const CueeState& state, const SubsetFit& fit, const Matrix& x, const Vector& y,
                      const Family& family, const CueeOptions& opts) {
  require_p(state.p, fit.p(), "cuee_update");
  require_converged(fit);
  const auto kind = opts.irls.ginv;
  const double tol = opts.irls.rank_tol;

  const Matrix g_check = numkern::inverse_or_ginv(numkern::symmetrize(state.a_tilde_cum + fit.a_mat), kind, tol);
  const Vector beta_check = g_check * (state.a_vec + fit.a_mat * fit.beta_sub);
  const ScoreEval at_check = score_eval(x, y, family, beta_check);

  CueeState next = state;
  next.a_tilde_cum = numkern::symmetrize(state.a_tilde_cum + at_check.a_mat);
  bool full = false;
  const Matrix g = numkern::inverse_or_ginv(next.a_tilde_cum, kind, tol, &full);
  const Vector a_term = at_check.a_mat * beta_check;
  next.beta_tilde = g * (state.a_vec + a_term + state.b_vec + at_check.m_vec);
  next.beta_check = beta_check;
  next.a_vec = state.a_vec + a_term;
  next.b_vec = state.b_vec + at_check.m_vec;
  next.beta_available = full;
  next.n_total += fit.n;
  ++next.chunks_seen;

  if (opts.variance == VarianceKind::ModelBased) {
    next.v_tilde = numkern::symmetrize(g);
    return next;
  }
  const Matrix meat = fit.full_rank() ? Matrix(at_check.a_mat * fit.v_sub * at_check.a_mat.transpose())
                                      : score_meat(x, y, family, next.beta_tilde);
  next.v_tilde = sandwich(g, state.a_tilde_cum * state.v_tilde * state.a_tilde_cum.transpose() + meat);
  return next;
}

AeeResult aee_combine(std::span<const SubsetFit> fits, numkern::GinvKind ginv, double rank_tol) {
  if (fits.empty()) fail(ErrorCode::InsufficientData, "aee_combine: no fits");
  const auto p = static_cast<Eigen::Index>(fits.front().p());
  Matrix a_sum = Matrix::Zero(p, p);
  Vector rhs = Vector::Zero(p);
  Matrix meat = Matrix::Zero(p, p);
  for (const SubsetFit& f : fits) {
    require_p(static_cast<std::size_t>(p), f.p(), "aee_combine");
    a_sum += f.a_mat;
    rhs += f.a_mat * f.beta_sub;
    meat += f.a_mat * f.v_sub * f.a_mat.transpose();
  }
  const Matrix g = numkern::inverse_or_ginv(numkern::symmetrize(a_sum), ginv, rank_tol);
  return AeeResult{g * rhs, sandwich(g, meat)};
}

std::vector<WaldCoef> wald_coef_tests(const Vector& beta, const Matrix& v) {
  require_p(static_cast<std::size_t>(beta.size()), static_cast<std::size_t>(v.rows()), "wald_coef_tests");
  std::vector<WaldCoef> out(static_cast<std::size_t>(beta.size()));
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    WaldCoef& c = out[static_cast<std::size_t>(j)];
    c.estimate = beta(j);
    c.se = std::sqrt(std::max(0.0, v(j, j)));
    if (c.estimate == 0.0) {
      c.z = 0.0;
    } else {
      c.z = c.se > 0.0 ? c.estimate / c.se : std::copysign(std::numeric_limits<double>::infinity(), c.estimate);
    }
    c.p_value = dist::chi2_upper_p(c.z * c.z, 1.0);
  }
  return out;
}

WaldTest wald_test(const Vector& beta, const Matrix& v, const Matrix& contrast) {
  require_p(static_cast<std::size_t>(beta.size()), static_cast<std::size_t>(contrast.cols()), "wald_test");
  const auto q = static_cast<std::size_t>(contrast.rows());
  if (q == 0 || q > static_cast<std::size_t>(beta.size()) || numkern::rank_detect(contrast) != q) {
    fail(ErrorCode::RankDeficientContrast, "contrast matrix must have full row rank q <= p");
  }
  WaldTest t;
  t.df = q;
  const Vector cb = contrast * beta;
  if (cb.squaredNorm() == 0.0) return t;
  const Matrix middle = numkern::symmetrize(contrast * v * contrast.transpose());
  Vector solved;
  try {
    solved = numkern::chol_solve(middle, cb);
  } catch (const Error&) {
    fail(ErrorCode::RankDeficientContrast, "C V C' is not invertible");
  }
  t.w = cb.dot(solved);
  t.p_value = dist::chi2_upper_p(t.w, static_cast<double>(q));
  return t;
}

}  // namespace streamstat::ee
