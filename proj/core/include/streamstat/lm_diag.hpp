#pragma once

// Predictive-residual diagnostics for an incoming chunk, computed against the
// state accumulated from the chunks before it.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "streamstat/lm_stream.hpp"

namespace streamstat::diag {

struct PredictiveResiduals {
  Vector e_check;        // y - X beta_{k-1}
  Vector t_check;        // e_check / sqrt(MSE_{k-1} (1 + leverage_like))
  Vector leverage_like;  // x' V_{k-1}^{-1} x
};

PredictiveResiduals predictive_residuals(const lm::LmState& state_prev, const Matrix& x, const Vector& y);

struct OutlierTest {
  double p_raw = 1.0;
  double p_adj = 1.0;
  bool flagged = false;
};

/// Two-sided t_{N_{k-1}-p} p-values, BH-adjusted, flagged when p_adj < fdr_alpha.
std::vector<OutlierTest> outlier_t_test(const PredictiveResiduals& pr, const lm::LmState& state_prev,
                                        double fdr_alpha);

enum class GlobalTestKind { NormalF, AsymptoticF };

struct GlobalTestResult {
  double statistic = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;
  double p_value = 1.0;
  GlobalTestKind kind = GlobalTestKind::NormalF;
};

/// Exact F test of H0: E(e_check) = 0 under normal errors.
GlobalTestResult normal_f_test(const PredictiveResiduals& pr, const lm::LmState& state_prev, const Matrix& x);

/// Gamma with Gamma Gamma' = I + X V^{-1} X', stored as U * diag(scale).
struct GammaFactor {
  Matrix u;      // n x n orthonormal
  Vector scale;  // sqrt(1 + d_i^2), d_i = 0 past the rank of X P'

  Matrix gamma() const;
  Vector whiten(const Vector& e) const;
};

GammaFactor gamma_factor(const lm::LmState& state_prev, const Matrix& x);

/// e* = Gamma^{-1} e_check; cov(e*) = sigma^2 I under the model.
Vector gamma_whiten(const lm::LmState& state_prev, const Matrix& x, const Vector& e_check);

/// Partition of a chunk's rows into m consecutive subgroups.
struct SubgroupScheme {
  std::vector<std::size_t> sizes;

  std::size_t m() const { return sizes.size(); }
  std::size_t total() const;

  /// m blocks of near-equal size; the first n % m blocks get one extra row.
  static SubgroupScheme contiguous(std::size_t n, std::size_t m);
};

/// Asymptotic F test that does not rely on normal errors.
GlobalTestResult asymptotic_f_test(const Vector& e_star, const SubgroupScheme& scheme,
                                   const lm::LmState& state_prev);

/// Benjamini-Hochberg step-up adjustment; output order matches input.
std::vector<double> bh_adjust(std::span<const double> p_values);

/// Externally studentized residuals of a chunk against its own fit,
/// t_{n_k - p - 1} under the model. Requires X of full column rank.
Vector studentized_residuals(const Matrix& x, const Vector& y);

struct ObservationDiagnostic {
  std::size_t index = 0;
  double e_check = 0.0;
  double t_check = 0.0;
  double p_raw = 1.0;
  double p_adj = 1.0;
  bool flagged = false;
};

struct DiagnosticReport {
  std::size_t chunk = 0;
  std::vector<ObservationDiagnostic> observations;
  std::optional<GlobalTestResult> normal_f;
  std::optional<GlobalTestResult> asymptotic_f;
};

nlohmann::json to_json(const GlobalTestResult& r);
GlobalTestResult global_test_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DiagnosticReport& r);
DiagnosticReport diagnostic_report_from_json(const nlohmann::json& j);

}  // namespace streamstat::diag
