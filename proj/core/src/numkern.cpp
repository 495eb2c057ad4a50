#include "streamstat/numkern.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "streamstat/error.hpp"

namespace streamstat::numkern {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double resolve_tol(const Matrix& a, double rank_tol) {
  return rank_tol > 0.0 ? rank_tol : default_rank_tol(a);
}

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    fail(ErrorCode::DimensionMismatch,
         std::string(what) + ": expected a square matrix, got " + std::to_string(a.rows()) + "x" +
             std::to_string(a.cols()));
  }
}

}  // namespace

std::string_view to_string(GinvKind kind) {
  return kind == GinvKind::MoorePenrose ? "moore_penrose" : "rao";
}

GinvKind ginv_kind_from_string(std::string_view name) {
  if (name == "moore_penrose" || name == "mp" || name == "pinv") return GinvKind::MoorePenrose;
  if (name == "rao") return GinvKind::Rao;
  fail(ErrorCode::InvalidConfig, "unknown generalized inverse '" + std::string(name) + "'");
}

double default_rank_tol(const Matrix& a) {
  const auto dim = static_cast<double>(std::max<Eigen::Index>({a.rows(), a.cols(), 1}));
  return 64.0 * dim * kEps;
}

Matrix symmetrize(const Matrix& a) {
  require_square(a, "symmetrize");
  return 0.5 * (a + a.transpose());
}

SpdFactor::SpdFactor(const Matrix& a) {
  require_square(a, "SpdFactor");
  const Matrix s = symmetrize(a);
  const Eigen::Index n = s.rows();
  lower_ = Matrix::Zero(n, n);
  const double max_diag = n > 0 ? s.diagonal().cwiseAbs().maxCoeff() : 0.0;
  const double floor = static_cast<double>(n) * kEps * max_diag;
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = s(j, j) - lower_.row(j).head(j).squaredNorm();
    if (!(d > floor)) {
      fail(ErrorCode::NotPositiveDefinite,
           "pivot " + std::to_string(j) + " = " + std::to_string(d) + " is not above " +
               std::to_string(floor));
    }
    const double ljj = std::sqrt(d);
    lower_(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      lower_(i, j) = (s(i, j) - lower_.row(i).head(j).dot(lower_.row(j).head(j))) / ljj;
    }
  }
}

Matrix SpdFactor::solve(const Matrix& b) const {
  if (b.rows() != lower_.rows()) {
    fail(ErrorCode::DimensionMismatch, "SpdFactor::solve: right-hand side has wrong row count");
  }
  Matrix x = lower_.triangularView<Eigen::Lower>().solve(b);
  lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

Vector SpdFactor::solve(const Vector& b) const {
  Matrix x = solve(Matrix(b));
  return x.col(0);
}

Matrix SpdFactor::inverse() const {
  Matrix inv = solve(Matrix(Matrix::Identity(lower_.rows(), lower_.rows())));
  return symmetrize(inv);
}

Matrix SpdFactor::reconstruct() const { return lower_ * lower_.transpose(); }

namespace {

SvdFactor make_svd(const Matrix& a, unsigned int options) {
  Eigen::JacobiSVD<Matrix, Eigen::ColPivHouseholderQRPreconditioner> svd(a, options);
  return SvdFactor{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

}  // namespace

SvdFactor SvdFactor::thin(const Matrix& a) {
  return make_svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

SvdFactor SvdFactor::full(const Matrix& a) {
  return make_svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
}

Matrix SvdFactor::reconstruct() const {
  const Eigen::Index r = singular_values.size();
  return u.leftCols(r) * singular_values.asDiagonal() * v.leftCols(r).transpose();
}

std::size_t SvdFactor::rank(double rank_tol) const {
  if (singular_values.size() == 0) return 0;
  const double smax = singular_values(0);
  if (!(smax > 0.0)) return 0;
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
    if (singular_values(i) > rank_tol * smax) ++r;
  }
  return r;
}

Matrix chol_solve(const Matrix& a, const Matrix& b) { return SpdFactor(a).solve(b); }

Vector chol_solve(const Matrix& a, const Vector& b) { return SpdFactor(a).solve(b); }

Matrix pinv_svd(const Matrix& a, double rank_tol) {
  if (a.size() == 0) return Matrix(a.cols(), a.rows());
  const double tol = resolve_tol(a, rank_tol);
  const SvdFactor f = SvdFactor::thin(a);
  const std::size_t r = f.rank(tol);
  Matrix out = Matrix::Zero(a.cols(), a.rows());
  for (std::size_t i = 0; i < r; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out.noalias() += (f.v.col(k) / f.singular_values(k)) * f.u.col(k).transpose();
  }
  return out;
}

std::vector<Eigen::Index> rao_pivot_set(const Matrix& a, double rank_tol) {
  require_square(a, "rao_pivot_set");
  const Matrix s = symmetrize(a);
  const Eigen::Index n = s.rows();
  const double tol = resolve_tol(s, rank_tol);
  const double max_diag = n > 0 ? s.diagonal().cwiseAbs().maxCoeff() : 0.0;
  std::vector<Eigen::Index> picked;
  if (!(max_diag > 0.0)) return picked;

  // Incremental Cholesky of the selected principal submatrix.
  Matrix lower = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto m = static_cast<Eigen::Index>(picked.size());
    Vector z(m);
    for (Eigen::Index t = 0; t < m; ++t) {
      double acc = s(picked[static_cast<std::size_t>(t)], j);
      for (Eigen::Index u = 0; u < t; ++u) acc -= lower(t, u) * z(u);
      z(t) = acc / lower(t, t);
    }
    const double d = s(j, j) - z.squaredNorm();
    if (d > tol * max_diag) {
      lower.row(m).head(m) = z.transpose();
      lower(m, m) = std::sqrt(d);
      picked.push_back(j);
    }
  }
  return picked;
}

Matrix ginv_rao(const Matrix& a, double rank_tol) {
  require_square(a, "ginv_rao");
  const auto picked = rao_pivot_set(a, rank_tol);
  if (picked.empty()) fail(ErrorCode::Degenerate, "ginv_rao: matrix is zero");
  const auto m = static_cast<Eigen::Index>(picked.size());
  Matrix sub(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      sub(i, j) = a(picked[static_cast<std::size_t>(i)], picked[static_cast<std::size_t>(j)]);
    }
  }
  const Matrix sub_inv = SpdFactor(sub).inverse();
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      out(picked[static_cast<std::size_t>(i)], picked[static_cast<std::size_t>(j)]) = sub_inv(i, j);
    }
  }
  return out;
}

std::size_t rank_detect(const Matrix& a, double rank_tol) {
  if (a.size() == 0) return 0;
  return SvdFactor::thin(a).rank(resolve_tol(a, rank_tol));
}

Matrix ginv(const Matrix& a, GinvKind kind, double rank_tol) {
  return kind == GinvKind::MoorePenrose ? pinv_svd(a, rank_tol) : ginv_rao(a, rank_tol);
}

Matrix inverse_or_ginv(const Matrix& a, GinvKind kind, double rank_tol, bool* full_rank) {
  require_square(a, "inverse_or_ginv");
  const bool full = rank_detect(a, rank_tol) == static_cast<std::size_t>(a.rows());
  if (full_rank != nullptr) *full_rank = full;
  if (full) {
    try {
      return SpdFactor(a).inverse();
    } catch (const Error&) {
      // numerically full rank but not positive definite at the pivot floor
      if (full_rank != nullptr) *full_rank = false;
    }
  }
  return ginv(symmetrize(a), kind, rank_tol);
}

double penrose1_residual(const Matrix& a, const Matrix& g) {
  const double na = a.norm();
  if (na == 0.0) return (a * g * a).norm();
  return (a * g * a - a).norm() / na;
}

}  // namespace streamstat::numkern
