#include "streamstat/lm_diag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "streamstat/distributions.hpp"
#include "streamstat/error.hpp"
#include "streamstat/json_util.hpp"

namespace streamstat::diag {

namespace {

void require_history(const lm::LmState& prev, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != prev.p) {
    fail(ErrorCode::DimensionMismatch, "chunk has " + std::to_string(x.cols()) + " columns, model has p = " +
                                           std::to_string(prev.p));
  }
  if (!prev.beta_available) fail(ErrorCode::SingularCumulative, "V_{k-1} is singular");
  if (prev.ridge_active()) fail(ErrorCode::InsufficientHistory, "ridge start is still active");
  if (prev.n_total <= prev.p) {
    fail(ErrorCode::InsufficientHistory, "N_{k-1} = " + std::to_string(prev.n_total) + " <= p");
  }
}

const char* kind_name(GlobalTestKind k) { return k == GlobalTestKind::NormalF ? "normal_f" : "asymptotic_f"; }

}  // namespace

PredictiveResiduals predictive_residuals(const lm::LmState& state_prev, const Matrix& x, const Vector& y) {
  require_history(state_prev, x);
  if (x.rows() != y.size()) fail(ErrorCode::DimensionMismatch, "X and y row counts differ");

  const numkern::SpdFactor vf(state_prev.v);
  const double mse = state_prev.mse();

  PredictiveResiduals pr;
  pr.e_check = y - x * state_prev.beta;
  // ||L^{-1} x_i||^2 = x_i' V^{-1} x_i
  const Matrix z = vf.lower().triangularView<Eigen::Lower>().solve(x.transpose());
  pr.leverage_like = z.colwise().squaredNorm().transpose();
  pr.t_check.resize(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double e = pr.e_check(i);
    const double sd = std::sqrt(mse * (1.0 + pr.leverage_like(i)));
    pr.t_check(i) = e == 0.0 ? 0.0 : e / sd;
  }
  return pr;
}

std::vector<OutlierTest> outlier_t_test(const PredictiveResiduals& pr, const lm::LmState& state_prev,
                                        double fdr_alpha) {
  if (!(fdr_alpha > 0.0 && fdr_alpha < 1.0)) fail(ErrorCode::InvalidConfig, "fdr_alpha must lie in (0, 1)");
  if (state_prev.n_total <= state_prev.p) fail(ErrorCode::InsufficientHistory, "N_{k-1} <= p");
  const double df = state_prev.residual_df();

  std::vector<double> raw(static_cast<std::size_t>(pr.t_check.size()));
  for (std::size_t i = 0; i < raw.size(); ++i) {
    raw[i] = dist::t_two_sided_p(pr.t_check(static_cast<Eigen::Index>(i)), df);
  }
  const std::vector<double> adj = bh_adjust(raw);

  std::vector<OutlierTest> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = OutlierTest{raw[i], adj[i], adj[i] < fdr_alpha};
  }
  return out;
}

GlobalTestResult normal_f_test(const PredictiveResiduals& pr, const lm::LmState& state_prev, const Matrix& x) {
  require_history(state_prev, x);
  const auto n = static_cast<double>(x.rows());
  GlobalTestResult r;
  r.kind = GlobalTestKind::NormalF;
  r.df1 = n;
  r.df2 = state_prev.residual_df();

  const Vector& e = pr.e_check;
  if (e.squaredNorm() == 0.0) return r;

  // (I + X V^{-1} X')^{-1} = I - X (V + X'X)^{-1} X'
  const Vector xte = x.transpose() * e;
  const Matrix inner = numkern::symmetrize(state_prev.v + x.transpose() * x);
  const double quad = e.squaredNorm() - xte.dot(numkern::chol_solve(inner, xte));
  const double mse = state_prev.mse();
  r.statistic = mse > 0.0 ? std::max(0.0, quad) / (n * mse) : std::numeric_limits<double>::infinity();
  r.p_value = dist::f_upper_p(r.statistic, r.df1, r.df2);
  return r;
}

Matrix GammaFactor::gamma() const { return u * scale.asDiagonal(); }

Vector GammaFactor::whiten(const Vector& e) const {
  return (u.transpose() * e).cwiseQuotient(scale);
}

GammaFactor gamma_factor(const lm::LmState& state_prev, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != state_prev.p) {
    fail(ErrorCode::DimensionMismatch, "gamma_factor: column count differs from p");
  }
  if (!state_prev.beta_available) fail(ErrorCode::SingularCumulative, "V_{k-1} is singular");

  // V^{-1} = P'P with P = L^{-1}, so X P' = (L^{-1} X')'.
  const numkern::SpdFactor vf(state_prev.v);
  const Matrix xt = vf.lower().triangularView<Eigen::Lower>().solve(x.transpose()).transpose();
  const numkern::SvdFactor svd = numkern::SvdFactor::full(xt);

  GammaFactor g;
  g.u = svd.u;
  g.scale = Vector::Ones(x.rows());
  for (Eigen::Index i = 0; i < svd.singular_values.size(); ++i) {
    const double d = svd.singular_values(i);
    g.scale(i) = std::sqrt(1.0 + d * d);
  }

  // Probe Gamma Gamma' v against (I + X~ X~') v.
  Vector probe(x.rows());
  for (Eigen::Index i = 0; i < probe.size(); ++i) probe(i) = 1.0 + static_cast<double>(i % 7) / 7.0;
  const Vector expect = probe + xt * (xt.transpose() * probe);
  const Vector got = g.u * (g.scale.array().square() * (g.u.transpose() * probe).array()).matrix();
  if ((got - expect).norm() > 1e-8 * expect.norm()) {
    fail(ErrorCode::Degenerate, "Gamma factor does not reconstruct I + X V^{-1} X'");
  }
  return g;
}

Vector gamma_whiten(const lm::LmState& state_prev, const Matrix& x, const Vector& e_check) {
  if (x.rows() != e_check.size()) fail(ErrorCode::DimensionMismatch, "gamma_whiten: length mismatch");
  return gamma_factor(state_prev, x).whiten(e_check);
}

std::size_t SubgroupScheme::total() const { return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}); }

SubgroupScheme SubgroupScheme::contiguous(std::size_t n, std::size_t m) {
  if (m == 0 || m > n) fail(ErrorCode::SchemeMismatch, "need 1 <= m <= n_k subgroups");
  SubgroupScheme s;
  s.sizes.assign(m, n / m);
  for (std::size_t i = 0; i < n % m; ++i) ++s.sizes[i];
  return s;
}

GlobalTestResult asymptotic_f_test(const Vector& e_star, const SubgroupScheme& scheme,
                                   const lm::LmState& state_prev) {
  if (scheme.m() == 0 || scheme.total() != static_cast<std::size_t>(e_star.size()) ||
      std::find(scheme.sizes.begin(), scheme.sizes.end(), std::size_t{0}) != scheme.sizes.end()) {
    fail(ErrorCode::SchemeMismatch, "subgroup sizes must be >= 1 and sum to n_k");
  }
  const auto m = static_cast<double>(scheme.m());
  const auto big_n = static_cast<double>(state_prev.n_total);
  if (!(big_n > m)) fail(ErrorCode::InsufficientHistory, "N_{k-1} must exceed m");

  GlobalTestResult r;
  r.kind = GlobalTestKind::AsymptoticF;
  r.df1 = m;
  r.df2 = big_n - m + 1.0;

  double acc = 0.0;
  Eigen::Index offset = 0;
  for (const std::size_t size : scheme.sizes) {
    const auto len = static_cast<Eigen::Index>(size);
    const double block_sum = e_star.segment(offset, len).sum();
    acc += block_sum * block_sum / static_cast<double>(size);
    offset += len;
  }
  if (acc == 0.0) return r;
  const double mse = state_prev.mse();
  r.statistic = mse > 0.0 ? acc / mse * (big_n - m + 1.0) / (big_n * m) : std::numeric_limits<double>::infinity();
  r.p_value = dist::f_upper_p(r.statistic, r.df1, r.df2);
  return r;
}

std::vector<double> bh_adjust(std::span<const double> p_values) {
  const std::size_t n = p_values.size();
  for (const double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::OutOfRange, "p-value outside [0, 1]: " + std::to_string(p));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

  std::vector<double> adj(n);
  double running = 1.0;
  for (std::size_t r = n; r-- > 0;) {
    const std::size_t i = order[r];
    const double candidate = static_cast<double>(n) * p_values[i] / static_cast<double>(r + 1);
    running = std::min(running, candidate);
    adj[i] = std::min(1.0, running);
  }
  return adj;
}

Vector studentized_residuals(const Matrix& x, const Vector& y) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (n != y.size()) fail(ErrorCode::DimensionMismatch, "studentized_residuals: length mismatch");
  if (n <= p + 1) fail(ErrorCode::InsufficientData, "need n_k > p + 1");

  const numkern::SpdFactor f(x.transpose() * x);
  const Vector beta = f.solve(Vector(x.transpose() * y));
  const Vector e = y - x * beta;
  const double sse = e.squaredNorm();
  const Matrix z = f.lower().triangularView<Eigen::Lower>().solve(x.transpose());
  const Vector h = z.colwise().squaredNorm().transpose();
  const double df = static_cast<double>(n - p - 1);

  Vector t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double denom = sse * (1.0 - h(i)) - e(i) * e(i);
    t(i) = denom > 0.0 ? e(i) * std::sqrt(df / denom) : std::copysign(std::numeric_limits<double>::infinity(), e(i));
  }
  return t;
}

nlohmann::json to_json(const GlobalTestResult& r) {
  using json_util::from_double;
  return nlohmann::json{{"kind", kind_name(r.kind)},
                        {"statistic", from_double(r.statistic)},
                        {"df1", from_double(r.df1)},
                        {"df2", from_double(r.df2)},
                        {"p_value", from_double(r.p_value)}};
}

GlobalTestResult global_test_from_json(const nlohmann::json& j) {
  using json_util::field;
  using json_util::to_double;
  GlobalTestResult r;
  r.kind = field(j, "kind").get<std::string>() == "normal_f" ? GlobalTestKind::NormalF : GlobalTestKind::AsymptoticF;
  r.statistic = to_double(field(j, "statistic"));
  r.df1 = to_double(field(j, "df1"));
  r.df2 = to_double(field(j, "df2"));
  r.p_value = to_double(field(j, "p_value"));
  return r;
}

nlohmann::json to_json(const DiagnosticReport& r) {
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : r.observations) {
    obs.push_back({{"index", o.index},
                   {"e_check", json_util::from_double(o.e_check)},
                   {"t_check", json_util::from_double(o.t_check)},
                   {"p_raw", json_util::from_double(o.p_raw)},
                   {"p_adj", json_util::from_double(o.p_adj)},
                   {"flagged", o.flagged}});
  }
  nlohmann::json global = nlohmann::json::object();
  global["normal_f"] = r.normal_f ? to_json(*r.normal_f) : nlohmann::json(nullptr);
  global["asymptotic_f"] = r.asymptotic_f ? to_json(*r.asymptotic_f) : nlohmann::json(nullptr);
  return nlohmann::json{{"chunk", r.chunk}, {"observations", std::move(obs)}, {"global", std::move(global)}};
}

DiagnosticReport diagnostic_report_from_json(const nlohmann::json& j) {
  using json_util::field;
  using json_util::to_double;
  DiagnosticReport r;
  r.chunk = field(j, "chunk").get<std::size_t>();
  for (const auto& o : field(j, "observations")) {
    r.observations.push_back(ObservationDiagnostic{field(o, "index").get<std::size_t>(),
                                                   to_double(field(o, "e_check")),
                                                   to_double(field(o, "t_check")),
                                                   to_double(field(o, "p_raw")),
                                                   to_double(field(o, "p_adj")),
                                                   field(o, "flagged").get<bool>()});
  }
  const auto& global = field(j, "global");
  if (!field(global, "normal_f").is_null()) r.normal_f = global_test_from_json(global["normal_f"]);
  if (!field(global, "asymptotic_f").is_null()) r.asymptotic_f = global_test_from_json(global["asymptotic_f"]);
  return r;
}

}  // namespace streamstat::diag
