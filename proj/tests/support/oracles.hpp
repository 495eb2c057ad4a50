#pragma once

// Reference computations on pooled data, written independently of the
// streaming code paths they check.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline double rel_diff(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::max(std::fabs(a), std::fabs(b))); }

inline double rel_diff(const Matrix& a, const Matrix& b) {
  const double scale = std::max(1.0, std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()));
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Ordinary least squares on pooled data of full column rank.
struct BatchLs {
  Vector beta;
  Matrix xtx_inv;
  double sse = 0.0;
  double sst = 0.0;
  std::size_t n = 0;
  std::size_t p = 0;

  double mse() const { return sse / static_cast<double>(n - p); }
  Vector t_stats() const {
    Vector t(beta.size());
    for (Eigen::Index j = 0; j < beta.size(); ++j) t(j) = beta(j) / std::sqrt(mse() * xtx_inv(j, j));
    return t;
  }
  /// (C b)' (C (X'X)^-1 C')^-1 (C b) / (q MSE).
  double glh_f(const Matrix& c) const {
    const Vector cb = c * beta;
    const Matrix mid = c * xtx_inv * c.transpose();
    return cb.dot(mid.ldlt().solve(cb)) / (static_cast<double>(c.rows()) * mse());
  }
};

inline BatchLs batch_ls(const Matrix& x, const Vector& y) {
  BatchLs r;
  r.n = static_cast<std::size_t>(x.rows());
  r.p = static_cast<std::size_t>(x.cols());
  const Eigen::ColPivHouseholderQR<Matrix> qr(x);
  r.beta = qr.solve(y);
  const Matrix rr = qr.matrixR().topLeftCorner(x.cols(), x.cols()).triangularView<Eigen::Upper>();
  const Matrix rinv = rr.inverse();
  const Matrix p_mat = qr.colsPermutation();
  r.xtx_inv = p_mat * (rinv * rinv.transpose()) * p_mat.transpose();
  r.sse = (y - x * r.beta).squaredNorm();
  r.sst = (y.array() - y.mean()).square().sum();
  return r;
}

/// Standardized predictive residuals from the pooled history.
inline Vector pooled_t(const Matrix& x_hist, const Vector& y_hist, const Matrix& x, const Vector& y) {
  const BatchLs h = batch_ls(x_hist, y_hist);
  const Vector e = y - x * h.beta;
  Vector t(e.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    const Vector xi = x.row(i).transpose();
    t(i) = e(i) / std::sqrt(h.mse() * (1.0 + xi.dot(h.xtx_inv * xi)));
  }
  return t;
}

/// e' (I + X (X_h'X_h)^-1 X')^-1 e / (n MSE_h) formed with the n x n matrix.
inline double pooled_f(const Matrix& x_hist, const Vector& y_hist, const Matrix& x, const Vector& y) {
  const BatchLs h = batch_ls(x_hist, y_hist);
  const Vector e = y - x * h.beta;
  const Matrix s = Matrix::Identity(x.rows(), x.rows()) + x * h.xtx_inv * x.transpose();
  return e.dot(s.llt().solve(e)) / (static_cast<double>(x.rows()) * h.mse());
}

/// Canonical-link score and information for logistic and Poisson models.
struct Score {
  Vector m;
  Matrix a;
};

inline Score glm_score(const std::string& family, const Matrix& x, const Vector& y, const Vector& beta) {
  const Vector eta = x * beta;
  Vector mu(eta.size()), w(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (family == "logistic") {
      mu(i) = 1.0 / (1.0 + std::exp(-eta(i)));
      w(i) = mu(i) * (1.0 - mu(i));
    } else {
      mu(i) = std::exp(eta(i));
      w(i) = mu(i);
    }
  }
  return Score{x.transpose() * (y - mu), x.transpose() * w.asDiagonal() * x};
}

/// Newton-Raphson root of the canonical-link score.
inline Vector glm_fit(const std::string& family, const Matrix& x, const Vector& y) {
  Vector beta = Vector::Zero(x.cols());
  for (int it = 0; it < 100; ++it) {
    const Score s = glm_score(family, x, y, beta);
    const Vector step = s.a.ldlt().solve(s.m);
    beta += step;
    if (step.cwiseAbs().maxCoeff() < 1e-13) break;
  }
  return beta;
}

/// Random design with an intercept and N(0, 1) covariates.
inline Matrix random_design(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p) {
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < p; ++j) x(i, j) = z(rng);
  }
  return x;
}

}  // namespace oracle
