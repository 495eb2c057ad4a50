#pragma once

// Dense small-dimension linear algebra used by every other module.
//
// Cumulative matrices are kept in full (unfactored) form and factored on
// demand; p is expected to be at most a few hundred.

#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace streamstat {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace numkern {

enum class GinvKind { MoorePenrose, Rao };

std::string_view to_string(GinvKind kind);
GinvKind ginv_kind_from_string(std::string_view name);

/// Relative singular-value cutoff used when the caller passes rank_tol <= 0:
/// 64 * dimension * machine epsilon.
double default_rank_tol(const Matrix& a);

/// (A + A^T) / 2.
Matrix symmetrize(const Matrix& a);

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
///
/// Factoring fails with NotPositiveDefinite when a pivot drops to or below
/// dimension * eps * max|diag|.
class SpdFactor {
 public:
  explicit SpdFactor(const Matrix& a);

  std::size_t dimension() const { return static_cast<std::size_t>(lower_.rows()); }
  const Matrix& lower() const { return lower_; }

  Matrix solve(const Matrix& b) const;
  Vector solve(const Vector& b) const;
  Matrix inverse() const;
  /// L * L^T.
  Matrix reconstruct() const;

 private:
  Matrix lower_;
};

/// A = U * diag(s) * V^T with s sorted descending.
struct SvdFactor {
  Matrix u;
  Vector singular_values;
  Matrix v;

  /// Thin factorization (U is rows x min(rows, cols)).
  static SvdFactor thin(const Matrix& a);
  /// Full factorization (U is rows x rows).
  static SvdFactor full(const Matrix& a);

  Matrix reconstruct() const;
  std::size_t rank(double rank_tol) const;
};

/// Solves A X = B for symmetric positive-definite A.
Matrix chol_solve(const Matrix& a, const Matrix& b);
Vector chol_solve(const Matrix& a, const Vector& b);

/// Moore-Penrose inverse; singular values below rank_tol * s_max are zeroed.
Matrix pinv_svd(const Matrix& a, double rank_tol = 0.0);

/// Block generalized inverse of a symmetric psd matrix: columns are taken
/// greedily in index order whenever they raise the rank, the selected
/// principal submatrix is inverted and the remaining rows/columns are zero.
/// Throws Degenerate for the zero matrix.
Matrix ginv_rao(const Matrix& a, double rank_tol = 0.0);

/// Indices picked by ginv_rao's greedy column selection.
std::vector<Eigen::Index> rao_pivot_set(const Matrix& a, double rank_tol = 0.0);

/// Number of singular values above rank_tol * s_max.
std::size_t rank_detect(const Matrix& a, double rank_tol = 0.0);

/// Dispatches to pinv_svd or ginv_rao.
Matrix ginv(const Matrix& a, GinvKind kind, double rank_tol = 0.0);

/// Inverse when a is full rank, otherwise the requested generalized inverse.
/// `full_rank` reports which branch was taken.
Matrix inverse_or_ginv(const Matrix& a, GinvKind kind, double rank_tol, bool* full_rank = nullptr);

/// ||A G A - A||_F / ||A||_F.
double penrose1_residual(const Matrix& a, const Matrix& g);

}  // namespace numkern
}  // namespace streamstat
