#include "streamstat/sim/runners.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string_view>

#include "streamstat/distributions.hpp"
#include "streamstat/engine.hpp"
#include "streamstat/error.hpp"
#include "streamstat/lm_diag.hpp"
#include "streamstat/lm_stream.hpp"

namespace streamstat::sim {

namespace {

using nlohmann::json;

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe r;
  if (xs.empty()) return r;
  const auto n = static_cast<double>(xs.size());
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (const double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return r;
}

Proportion proportion(std::size_t hits, std::size_t n) {
  Proportion p;
  if (n == 0) return p;
  p.value = static_cast<double>(hits) / static_cast<double>(n);
  p.se = std::sqrt(p.value * (1.0 - p.value) / static_cast<double>(n));
  return p;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

// Cumulative LM state over all chunks but the last.
lm::LmState history_state(const std::vector<LabeledChunk>& chunks) {
  lm::LmState st = lm::LmState::empty(static_cast<std::size_t>(chunks.front().x.cols()));
  for (std::size_t k = 0; k + 1 < chunks.size(); ++k) st = lm::lm_update(st, lm::summarize_chunk(chunks[k].x, chunks[k].y));
  return st;
}

void require_history(std::size_t k_star) {
  if (k_star < 2) fail(ErrorCode::InvalidConfig, "k_star must be >= 2 so that prior data exist");
}

struct StreamFit {
  Vector beta;
  Matrix v;
  bool available = false;
  std::size_t merged = 0;
};

StreamFit stream_ee(engine::ModelKind kind, const std::string& family, const Matrix& x, const Vector& y,
                    std::size_t chunk_rows, numkern::GinvKind ginv, ee::VarianceKind variance) {
  engine::ModelConfig cfg;
  cfg.kind = kind;
  cfg.family = family;
  cfg.response = "y";
  for (Eigen::Index j = 0; j < x.cols(); ++j) cfg.covariates.push_back("c" + std::to_string(j));
  cfg.intercept = false;
  cfg.chunk_size = chunk_rows;
  cfg.ginv = ginv;
  cfg.irls.ginv = ginv;
  cfg.variance = variance;

  engine::StreamEngine eng(cfg);
  StreamFit out;
  const auto n = static_cast<std::size_t>(x.rows());
  for (std::size_t start = 0; start < n; start += chunk_rows) {
    const auto len = static_cast<Eigen::Index>(std::min(chunk_rows, n - start));
    const auto s = static_cast<Eigen::Index>(start);
    if (!eng.process_chunk(x.middleRows(s, len), y.segment(s, len)).absorbed) ++out.merged;
  }
  eng.finish();
  if (kind == engine::ModelKind::Cee) {
    const auto& st = std::get<ee::CeeState>(eng.state());
    out.beta = st.beta;
    out.v = st.v;
    out.available = st.beta_available;
  } else {
    const auto& st = std::get<ee::CueeState>(eng.state());
    out.beta = st.beta_tilde;
    out.v = st.v_tilde;
    out.available = st.beta_available;
  }
  return out;
}

double rmse_to(const Vector& est, const Vector& truth) { return std::sqrt((est - truth).squaredNorm() / truth.size()); }

Vector std_errors(const Matrix& v) { return v.diagonal().cwiseMax(0.0).cwiseSqrt(); }

// --- JSON helpers -----------------------------------------------------------

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, "runner config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorCode::InvalidConfig, "unknown runner config key '" + key + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j[key].get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string(key) + ": " + e.what());
  }
}

void read_vector(const json& j, const char* key, Vector& dst) {
  if (!j.contains(key)) return;
  std::vector<double> v;
  read(j, key, v);
  dst = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void read_covariates(const json& j, const char* key, std::vector<CovariateSpec>& dst) {
  if (!j.contains(key)) return;
  dst.clear();
  for (const auto& c : j[key]) {
    const std::string kind = c.value("kind", "normal");
    if (kind == "normal") {
      dst.push_back(CovariateSpec::normal());
    } else if (kind == "bernoulli") {
      const double p = c.value("p", 0.5);
      if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::InvalidConfig, "bernoulli p must lie in (0, 1)");
      dst.push_back(CovariateSpec::bernoulli(p));
    } else {
      fail(ErrorCode::InvalidConfig, "covariate kind must be normal or bernoulli");
    }
  }
}

void read_base(const json& j, RunnerBase& b) {
  read(j, "reps", b.reps);
  read(j, "seed", b.seed);
  read(j, "workers", b.workers);
  if (b.reps < 1) fail(ErrorCode::InvalidConfig, "reps must be >= 1");
}

void read_outlier_base(const json& j, OutlierSimConfig& o) {
  read_vector(j, "beta", o.beta);
  read(j, "contamination_rate", o.contamination_rate);
  read(j, "nu", o.nu);
  read(j, "gamma", o.gamma);
}

std::vector<ErrorKind> read_errors(const json& j, std::vector<ErrorKind> fallback) {
  if (!j.contains("errors")) return fallback;
  std::vector<ErrorKind> out;
  for (const auto& e : j["errors"]) out.push_back(error_kind_from_string(e.get<std::string>()));
  return out;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::Cee:
      return "CEE";
    case Method::Cuee:
      return "CUEE";
    case Method::Ee:
      return "EE";
  }
  return "EE";
}

// --- power ------------------------------------------------------------------

std::vector<PowerCell> run_power_study(const PowerStudyConfig& cfg) {
  struct CellSpec {
    ErrorKind error;
    double delta;
    std::size_t n_k;
    std::size_t k_star;
  };
  std::vector<CellSpec> specs;
  for (const ErrorKind e : cfg.errors) {
    for (const double d : cfg.delta) {
      for (const std::size_t n : cfg.n_k) {
        for (const std::size_t k : cfg.k_star) {
          require_history(k);
          specs.push_back({e, d, n, k});
        }
      }
    }
  }
  const std::size_t reps = cfg.reps;
  std::vector<char> reject_f(specs.size() * reps, 0);
  std::vector<char> reject_af(specs.size() * reps, 0);

  parallel_for(
      specs.size() * reps,
      [&](std::size_t idx) {
        const std::size_t c = idx / reps;
        const std::size_t r = idx % reps;
        const CellSpec& s = specs[c];
        OutlierSimConfig oc = cfg.base;
        oc.error_kind = s.error;
        oc.delta = s.delta;
        oc.n_k = s.n_k;
        oc.k_star = s.k_star;
        Rng rng = make_rng(derive_seed(cfg.seed, c), r);
        const auto chunks = gen_outlier_stream(oc, rng);
        const lm::LmState prev = history_state(chunks);
        const LabeledChunk& target = chunks.back();
        const diag::PredictiveResiduals pr = diag::predictive_residuals(prev, target.x, target.y);
        reject_f[idx] = diag::normal_f_test(pr, prev, target.x).p_value <= cfg.alpha;
        const Vector e_star = diag::gamma_whiten(prev, target.x, pr.e_check);
        const auto scheme = diag::SubgroupScheme::contiguous(s.n_k, cfg.m);
        reject_af[idx] = diag::asymptotic_f_test(e_star, scheme, prev).p_value <= cfg.alpha;
      },
      cfg.workers);

  std::vector<PowerCell> out;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    const auto first = reject_f.begin() + static_cast<std::ptrdiff_t>(c * reps);
    const auto first_a = reject_af.begin() + static_cast<std::ptrdiff_t>(c * reps);
    PowerCell cell;
    cell.error = specs[c].error;
    cell.delta = specs[c].delta;
    cell.n_k = specs[c].n_k;
    cell.k_star = specs[c].k_star;
    cell.reps = reps;
    cell.normal_f = proportion(static_cast<std::size_t>(std::count(first, first + static_cast<std::ptrdiff_t>(reps), 1)), reps);
    cell.asymptotic_f =
        proportion(static_cast<std::size_t>(std::count(first_a, first_a + static_cast<std::ptrdiff_t>(reps), 1)), reps);
    out.push_back(cell);
  }
  return out;
}

void write_power_csv(std::ostream& out, const std::vector<PowerCell>& cells) {
  out << "errors,strength_delta,n_k,k_star,reps,power_f,se_f,power_asymptotic_f,se_asymptotic_f\n";
  for (const auto& c : cells) {
    out << to_string(c.error) << ',' << fmt(c.delta) << ',' << c.n_k << ',' << c.k_star << ',' << c.reps << ','
        << fmt(c.normal_f.value) << ',' << fmt(c.normal_f.se) << ',' << fmt(c.asymptotic_f.value) << ','
        << fmt(c.asymptotic_f.se) << '\n';
  }
}

// --- FP / FN ----------------------------------------------------------------

std::vector<FpFnCell> run_fpfn_study(const FpFnConfig& cfg) {
  struct CellSpec {
    std::size_t n_k;
    std::size_t k_star;
    double delta;
  };
  std::vector<CellSpec> specs;
  for (const std::size_t n : cfg.n_k) {
    for (const std::size_t k : cfg.k_star) {
      require_history(k);
      for (const double d : cfg.delta) specs.push_back({n, k, d});
    }
  }
  const std::size_t reps = cfg.reps;
  struct Counts {
    double fp_pred = 0, fn_pred = 0, fp_stud = 0, fn_stud = 0;
  };
  std::vector<Counts> counts(specs.size() * reps);

  parallel_for(
      specs.size() * reps,
      [&](std::size_t idx) {
        const std::size_t c = idx / reps;
        const std::size_t r = idx % reps;
        OutlierSimConfig oc = cfg.base;
        oc.error_kind = ErrorKind::Normal;
        oc.n_k = specs[c].n_k;
        oc.k_star = specs[c].k_star;
        oc.delta = specs[c].delta;
        Rng rng = make_rng(derive_seed(cfg.seed, c), r);
        const auto chunks = gen_outlier_stream(oc, rng);
        const lm::LmState prev = history_state(chunks);
        const LabeledChunk& target = chunks.back();

        const auto pr = diag::predictive_residuals(prev, target.x, target.y);
        const auto pred = diag::outlier_t_test(pr, prev, cfg.fdr_alpha);

        const Vector t_stud = diag::studentized_residuals(target.x, target.y);
        const double df = static_cast<double>(target.x.rows() - target.x.cols() - 1);
        std::vector<double> p_stud(static_cast<std::size_t>(t_stud.size()));
        for (std::size_t i = 0; i < p_stud.size(); ++i) {
          p_stud[i] = dist::t_two_sided_p(t_stud(static_cast<Eigen::Index>(i)), df);
        }
        const auto adj_stud = diag::bh_adjust(p_stud);

        Counts& k = counts[idx];
        for (std::size_t i = 0; i < target.outlier.size(); ++i) {
          const bool truth = target.outlier[i];
          const bool flag_pred = pred[i].flagged;
          const bool flag_stud = adj_stud[i] < cfg.fdr_alpha;
          k.fp_pred += flag_pred && !truth;
          k.fn_pred += !flag_pred && truth;
          k.fp_stud += flag_stud && !truth;
          k.fn_stud += !flag_stud && truth;
        }
      },
      cfg.workers);

  std::vector<FpFnCell> out;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    std::vector<double> a, b, d, e;
    for (std::size_t r = 0; r < reps; ++r) {
      const Counts& k = counts[c * reps + r];
      a.push_back(k.fp_pred);
      b.push_back(k.fn_pred);
      d.push_back(k.fp_stud);
      e.push_back(k.fn_stud);
    }
    out.push_back(FpFnCell{specs[c].n_k, specs[c].k_star, specs[c].delta, reps, mean_se(a), mean_se(b), mean_se(d),
                           mean_se(e)});
  }
  return out;
}

void write_fpfn_csv(std::ostream& out, const std::vector<FpFnCell>& cells) {
  out << "n_k,k_star,strength_delta,reps,fp_predictive,se_fp_predictive,fn_predictive,se_fn_predictive,"
         "fp_studentized,se_fp_studentized,fn_studentized,se_fn_studentized\n";
  for (const auto& c : cells) {
    out << c.n_k << ',' << c.k_star << ',' << fmt(c.delta) << ',' << c.reps << ',' << fmt(c.fp_predictive.mean) << ','
        << fmt(c.fp_predictive.se) << ',' << fmt(c.fn_predictive.mean) << ',' << fmt(c.fn_predictive.se) << ','
        << fmt(c.fp_studentized.mean) << ',' << fmt(c.fp_studentized.se) << ',' << fmt(c.fn_studentized.mean) << ','
        << fmt(c.fn_studentized.se) << '\n';
  }
}

// --- RMSE vs K --------------------------------------------------------------

std::vector<RmseVsKRow> run_rmse_vs_k(const RmseVsKConfig& cfg) {
  if (static_cast<std::size_t>(cfg.beta.size()) != cfg.covariates.size() + 1) {
    fail(ErrorCode::InvalidConfig, "beta must have one entry per covariate plus the intercept");
  }
  for (const std::size_t k : cfg.k_grid) {
    if (k == 0 || cfg.n_total % k != 0) fail(ErrorCode::InvalidConfig, "n_total must be divisible by every K");
  }
  const std::size_t reps = cfg.reps;
  const std::size_t nk = cfg.k_grid.size();
  std::vector<double> cee(reps * nk), cuee(reps * nk), merged(reps * nk);
  const ee::Family family = ee::Family::logistic();

  parallel_for(
      reps,
      [&](std::size_t r) {
        Rng rng = make_rng(cfg.seed, r);
        const EeDataset d = gen_ee_dataset(family, cfg.beta, cfg.covariates, cfg.n_total, rng);
        for (std::size_t g = 0; g < nk; ++g) {
          const std::size_t rows = cfg.n_total / cfg.k_grid[g];
          const auto variance = ee::default_variance(family);
          const StreamFit a = stream_ee(engine::ModelKind::Cee, "logistic", d.x, d.y, rows,
                                        numkern::GinvKind::MoorePenrose, variance);
          const StreamFit b = stream_ee(engine::ModelKind::Cuee, "logistic", d.x, d.y, rows,
                                        numkern::GinvKind::MoorePenrose, variance);
          cee[r * nk + g] = rmse_to(a.beta, cfg.beta);
          cuee[r * nk + g] = rmse_to(b.beta, cfg.beta);
          merged[r * nk + g] = static_cast<double>(a.merged);
        }
      },
      cfg.workers);

  std::vector<RmseVsKRow> out;
  for (std::size_t g = 0; g < nk; ++g) {
    std::vector<double> a, b, m;
    for (std::size_t r = 0; r < reps; ++r) {
      a.push_back(cee[r * nk + g]);
      b.push_back(cuee[r * nk + g]);
      m.push_back(merged[r * nk + g]);
    }
    out.push_back(RmseVsKRow{cfg.k_grid[g], reps, mean_se(a), mean_se(b), mean_se(m)});
  }
  return out;
}

void write_rmse_vs_k_csv(std::ostream& out, const std::vector<RmseVsKRow>& rows) {
  out << "K,reps,rmse_cee,se_rmse_cee,rmse_cuee,se_rmse_cuee,merged_chunks,se_merged_chunks\n";
  for (const auto& r : rows) {
    out << r.k << ',' << r.reps << ',' << fmt(r.rmse_cee.mean) << ',' << fmt(r.rmse_cee.se) << ','
        << fmt(r.rmse_cuee.mean) << ',' << fmt(r.rmse_cuee.se) << ',' << fmt(r.merged_chunks.mean) << ','
        << fmt(r.merged_chunks.se) << '\n';
  }
}

// --- Poisson bias -----------------------------------------------------------

PoissonBiasResult run_poisson_bias(const PoissonBiasConfig& cfg) {
  const auto p = static_cast<std::size_t>(cfg.beta.size());
  if (p != cfg.covariates.size() + 1) {
    fail(ErrorCode::InvalidConfig, "beta must have one entry per covariate plus the intercept");
  }
  const std::size_t reps = cfg.reps;
  const ee::Family family = ee::Family::poisson();
  const auto variance = ee::default_variance(family);
  constexpr std::size_t kMethods = 3;  // CEE, CUEE, EE

  struct RepOut {
    Vector bias[kMethods];
    Vector se[kMethods];
  };
  std::vector<RepOut> reps_out(cfg.n_k.size() * reps);

  parallel_for(
      cfg.n_k.size() * reps,
      [&](std::size_t idx) {
        const std::size_t c = idx / reps;
        const std::size_t r = idx % reps;
        const std::size_t rows = cfg.n_k[c];
        Rng rng = make_rng(derive_seed(cfg.seed, c), r);
        const EeDataset d = gen_ee_dataset(family, cfg.beta, cfg.covariates, cfg.k * rows, rng);
        const StreamFit a =
            stream_ee(engine::ModelKind::Cee, "poisson", d.x, d.y, rows, numkern::GinvKind::MoorePenrose, variance);
        const StreamFit b =
            stream_ee(engine::ModelKind::Cuee, "poisson", d.x, d.y, rows, numkern::GinvKind::MoorePenrose, variance);
        const ee::SubsetFit pooled = ee::irls_solve(d.x, d.y, family, ee::IrlsConfig{});
        ee::require_converged(pooled);
        RepOut& o = reps_out[idx];
        o.bias[0] = a.beta - cfg.beta;
        o.bias[1] = b.beta - cfg.beta;
        o.bias[2] = pooled.beta_sub - cfg.beta;
        o.se[0] = std_errors(a.v);
        o.se[1] = std_errors(b.v);
        o.se[2] = std_errors(pooled.v_sub);
      },
      cfg.workers);

  PoissonBiasResult res;
  const Method methods[kMethods] = {Method::Cee, Method::Cuee, Method::Ee};
  for (std::size_t c = 0; c < cfg.n_k.size(); ++c) {
    for (std::size_t m = 0; m < kMethods; ++m) {
      for (std::size_t r = 0; r < reps; ++r) {
        res.rep_biases.push_back({cfg.n_k[c], r, methods[m], reps_out[c * reps + r].bias[m]});
      }
    }
    for (std::size_t m = 0; m < kMethods; ++m) {
      for (std::size_t j = 0; j < p; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        std::vector<double> bias, se, sq, sq_ee;
        for (std::size_t r = 0; r < reps; ++r) {
          const RepOut& o = reps_out[c * reps + r];
          bias.push_back(o.bias[m](jj));
          se.push_back(o.se[m](jj));
          sq.push_back(o.bias[m](jj) * o.bias[m](jj));
          sq_ee.push_back(o.bias[2](jj) * o.bias[2](jj));
        }
        PoissonBiasCell cell;
        cell.n_k = cfg.n_k[c];
        cell.method = methods[m];
        cell.coefficient = j + 1;
        cell.reps = reps;
        cell.bias = mean_se(bias);
        cell.se_estimate = mean_se(se);
        const double a = std::accumulate(sq.begin(), sq.end(), 0.0) / static_cast<double>(reps);
        const double b = std::accumulate(sq_ee.begin(), sq_ee.end(), 0.0) / static_cast<double>(reps);
        cell.rmse = std::sqrt(a);
        cell.rmse_ratio = b > 0.0 ? std::sqrt(a / b) : 1.0;
        if (m != 2 && reps > 1 && a > 0.0 && b > 0.0) {
          // Delta method on log(ratio) = (log a - log b) / 2.
          double va = 0.0, vb = 0.0, cab = 0.0;
          for (std::size_t r = 0; r < reps; ++r) {
            va += (sq[r] - a) * (sq[r] - a);
            vb += (sq_ee[r] - b) * (sq_ee[r] - b);
            cab += (sq[r] - a) * (sq_ee[r] - b);
          }
          const double n = static_cast<double>(reps);
          va /= (n - 1.0);
          vb /= (n - 1.0);
          cab /= (n - 1.0);
          const double var_log = 0.25 * (va / (a * a) + vb / (b * b) - 2.0 * cab / (a * b)) / n;
          cell.ratio_se = cell.rmse_ratio * std::sqrt(std::max(0.0, var_log));
        }
        res.cells.push_back(cell);
      }
    }
  }
  return res;
}

void write_poisson_ratio_csv(std::ostream& out, const PoissonBiasResult& r) {
  std::size_t p = 0;
  for (const auto& c : r.cells) p = std::max(p, c.coefficient);
  out << "n_k,method";
  for (std::size_t j = 1; j <= p; ++j) out << ",beta" << j;
  for (std::size_t j = 1; j <= p; ++j) out << ",se_beta" << j;
  out << '\n';
  for (std::size_t i = 0; i < r.cells.size(); i += p) {
    if (r.cells[i].method == Method::Ee) continue;
    out << r.cells[i].n_k << ',' << to_string(r.cells[i].method);
    for (std::size_t j = 0; j < p; ++j) out << ',' << fmt(r.cells[i + j].rmse_ratio);
    for (std::size_t j = 0; j < p; ++j) out << ',' << fmt(r.cells[i + j].ratio_se);
    out << '\n';
  }
}

void write_poisson_detail_csv(std::ostream& out, const PoissonBiasResult& r) {
  out << "n_k,method,coefficient,reps,bias,se_bias,rmse,rmse_ratio,se_rmse_ratio,mean_reported_se,se_mean_reported_se\n";
  for (const auto& c : r.cells) {
    out << c.n_k << ',' << to_string(c.method) << ",beta" << c.coefficient << ',' << c.reps << ',' << fmt(c.bias.mean)
        << ',' << fmt(c.bias.se) << ',' << fmt(c.rmse) << ',' << fmt(c.rmse_ratio) << ',' << fmt(c.ratio_se) << ','
        << fmt(c.se_estimate.mean) << ',' << fmt(c.se_estimate.se) << '\n';
  }
}

void write_poisson_reps_csv(std::ostream& out, const PoissonBiasResult& r) {
  std::size_t p = r.rep_biases.empty() ? 0 : static_cast<std::size_t>(r.rep_biases.front().bias.size());
  out << "n_k,rep,method";
  for (std::size_t j = 1; j <= p; ++j) out << ",bias_beta" << j;
  out << '\n';
  for (const auto& b : r.rep_biases) {
    out << b.n_k << ',' << b.rep << ',' << to_string(b.method);
    for (Eigen::Index j = 0; j < b.bias.size(); ++j) out << ',' << fmt(b.bias(j));
    out << '\n';
  }
}

// --- generalized-inverse invariance ----------------------------------------

GinvInvarianceResult run_ginv_invariance(const GinvInvarianceConfig& cfg) {
  const auto p = static_cast<std::size_t>(cfg.beta.size());
  if (p != cfg.covariates.size() + 1) {
    fail(ErrorCode::InvalidConfig, "beta must have one entry per covariate plus the intercept");
  }
  if (cfg.k == 0 || cfg.n_total % cfg.k != 0) fail(ErrorCode::InvalidConfig, "n_total must be divisible by K");
  if (cfg.sort_column == 0 || cfg.sort_column >= p) fail(ErrorCode::InvalidConfig, "sort_column out of range");
  const std::size_t rows = cfg.n_total / cfg.k;
  const std::size_t reps = cfg.reps;
  const ee::Family family = ee::Family::logistic();
  const auto variance = ee::default_variance(family);

  struct RepOut {
    Vector est[4];
    Vector se[4];
    double deficient_share = 0.0;
  };
  std::vector<RepOut> out(reps);

  parallel_for(
      reps,
      [&](std::size_t r) {
        Rng rng = make_rng(cfg.seed, r);
        const EeDataset d = gen_ee_dataset(family, cfg.beta, cfg.covariates, cfg.n_total, rng);
        std::vector<Eigen::Index> order(static_cast<std::size_t>(d.x.rows()));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        const auto col = static_cast<Eigen::Index>(cfg.sort_column);
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return d.x(a, col) < d.x(b, col); });
        Matrix xs(d.x.rows(), d.x.cols());
        Vector ys(d.y.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
          xs.row(static_cast<Eigen::Index>(i)) = d.x.row(order[i]);
          ys(static_cast<Eigen::Index>(i)) = d.y(order[i]);
        }

        std::size_t deficient = 0;
        for (std::size_t s = 0; s < cfg.n_total; s += rows) {
          const auto ss = static_cast<Eigen::Index>(s);
          const auto len = static_cast<Eigen::Index>(rows);
          if (numkern::rank_detect(xs.middleRows(ss, len)) < p) ++deficient;
        }

        const StreamFit mp =
            stream_ee(engine::ModelKind::Cuee, "logistic", xs, ys, rows, numkern::GinvKind::MoorePenrose, variance);
        const StreamFit rao =
            stream_ee(engine::ModelKind::Cuee, "logistic", xs, ys, rows, numkern::GinvKind::Rao, variance);
        const StreamFit full =
            stream_ee(engine::ModelKind::Cuee, "logistic", d.x, d.y, rows, numkern::GinvKind::MoorePenrose, variance);
        const ee::SubsetFit pooled = ee::irls_solve(d.x, d.y, family, ee::IrlsConfig{});
        ee::require_converged(pooled);

        RepOut& o = out[r];
        o.est[0] = mp.beta;
        o.se[0] = std_errors(mp.v);
        o.est[1] = rao.beta;
        o.se[1] = std_errors(rao.v);
        o.est[2] = full.beta;
        o.se[2] = std_errors(full.v);
        o.est[3] = pooled.beta_sub;
        o.se[3] = std_errors(numkern::SpdFactor(pooled.a_mat).inverse());
        o.deficient_share = static_cast<double>(deficient) / static_cast<double>(cfg.k);
      },
      cfg.workers);

  GinvInvarianceResult res;
  for (std::size_t j = 0; j < p; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    GinvInvarianceRow row;
    row.coefficient = j + 1;
    row.reps = reps;
    std::vector<double> v[4], s[4];
    for (std::size_t r = 0; r < reps; ++r) {
      for (int m = 0; m < 4; ++m) {
        v[m].push_back(out[r].est[m](jj));
        s[m].push_back(out[r].se[m](jj));
      }
      row.max_abs_diff = std::max(row.max_abs_diff, std::fabs(out[r].est[0](jj) - out[r].est[1](jj)));
    }
    row.cuee_mp = mean_se(v[0]);
    row.se_mp = mean_se(s[0]);
    row.cuee_rao = mean_se(v[1]);
    row.se_rao = mean_se(s[1]);
    row.cuee_full_rank = mean_se(v[2]);
    row.se_full_rank = mean_se(s[2]);
    row.ee = mean_se(v[3]);
    row.se_ee = mean_se(s[3]);
    res.rows.push_back(row);
  }
  double share = 0.0;
  for (const auto& o : out) share += o.deficient_share;
  res.rank_deficient_chunk_share = share / static_cast<double>(reps);
  return res;
}

void write_ginv_invariance_csv(std::ostream& out, const GinvInvarianceResult& r) {
  out << "coefficient,reps,cuee_ginv_mp,mc_se_cuee_ginv_mp,se_cuee_ginv_mp,cuee_ginv_rao,mc_se_cuee_ginv_rao,"
         "se_cuee_ginv_rao,cuee_full_rank,mc_se_cuee_full_rank,se_cuee_full_rank,ee,mc_se_ee,se_ee,"
         "max_abs_diff_mp_rao,rank_deficient_chunk_share\n";
  for (const auto& row : r.rows) {
    out << "beta" << row.coefficient << ',' << row.reps << ',' << fmt(row.cuee_mp.mean) << ',' << fmt(row.cuee_mp.se)
        << ',' << fmt(row.se_mp.mean) << ',' << fmt(row.cuee_rao.mean) << ',' << fmt(row.cuee_rao.se) << ','
        << fmt(row.se_rao.mean) << ',' << fmt(row.cuee_full_rank.mean) << ',' << fmt(row.cuee_full_rank.se) << ','
        << fmt(row.se_full_rank.mean) << ',' << fmt(row.ee.mean) << ',' << fmt(row.ee.se) << ','
        << fmt(row.se_ee.mean) << ',' << fmt(row.max_abs_diff) << ',' << fmt(r.rank_deficient_chunk_share) << '\n';
  }
}

// --- generator checks -------------------------------------------------------

void write_generator_check_csv(std::ostream& out, const std::vector<GeneratorCheckRow>& rows) {
  out << "runner,column,expected_mean,sample_mean,z_mean,expected_var,sample_var,z_var,pass\n";
  for (const auto& r : rows) {
    const MomentCheck& m = r.check;
    out << r.runner << ",x" << m.column << ',' << fmt(m.expected_mean) << ',' << fmt(m.sample_mean) << ','
        << fmt(m.z_mean) << ',' << fmt(m.expected_var) << ',' << fmt(m.sample_var) << ',' << fmt(m.z_var) << ','
        << (m.pass ? "true" : "false") << '\n';
  }
}

std::vector<GeneratorCheckRow> generator_checks_outlier(const OutlierSimConfig& base, std::uint64_t seed) {
  OutlierSimConfig oc = base;
  oc.k_star = 2;
  oc.n_k = 5000;
  Rng rng = make_rng(derive_seed(seed, 0), 0);
  const auto chunks = gen_outlier_stream(oc, rng);
  const std::vector<CovariateSpec> covs(static_cast<std::size_t>(oc.beta.size() - 1), CovariateSpec::normal());
  std::vector<GeneratorCheckRow> out;
  for (const auto& m : check_covariate_moments(chunks.front().x, covs)) out.push_back({"outlier", m});
  return out;
}

std::vector<GeneratorCheckRow> generator_checks_ee(const std::string& runner, const ee::Family& family,
                                                   const Vector& beta, const std::vector<CovariateSpec>& covariates,
                                                   std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  const EeDataset d = gen_ee_dataset(family, beta, covariates, n, rng);
  std::vector<GeneratorCheckRow> out;
  for (const auto& m : check_covariate_moments(d.x, covariates)) out.push_back({runner, m});
  return out;
}

// --- JSON configs -----------------------------------------------------------

PowerStudyConfig power_config_from_json(const json& j) {
  reject_unknown(j, {"reps", "seed", "workers", "k_star", "n_k", "delta", "errors", "m", "alpha", "beta",
                     "contamination_rate", "nu", "gamma"});
  PowerStudyConfig c;
  read_base(j, c);
  read(j, "k_star", c.k_star);
  read(j, "n_k", c.n_k);
  read(j, "delta", c.delta);
  c.errors = read_errors(j, c.errors);
  read(j, "m", c.m);
  read(j, "alpha", c.alpha);
  read_outlier_base(j, c.base);
  return c;
}

FpFnConfig fpfn_config_from_json(const json& j) {
  reject_unknown(j, {"reps", "seed", "workers", "k_star", "n_k", "delta", "fdr_alpha", "beta", "contamination_rate"});
  FpFnConfig c;
  read_base(j, c);
  read(j, "k_star", c.k_star);
  read(j, "n_k", c.n_k);
  read(j, "delta", c.delta);
  read(j, "fdr_alpha", c.fdr_alpha);
  read_outlier_base(j, c.base);
  return c;
}

RmseVsKConfig rmse_vs_k_config_from_json(const json& j) {
  reject_unknown(j, {"reps", "seed", "workers", "n_total", "k_grid", "beta", "covariates"});
  RmseVsKConfig c;
  read_base(j, c);
  read(j, "n_total", c.n_total);
  read(j, "k_grid", c.k_grid);
  read_vector(j, "beta", c.beta);
  read_covariates(j, "covariates", c.covariates);
  return c;
}

PoissonBiasConfig poisson_bias_config_from_json(const json& j) {
  reject_unknown(j, {"reps", "seed", "workers", "k", "n_k", "beta", "covariates"});
  PoissonBiasConfig c;
  read_base(j, c);
  read(j, "k", c.k);
  read(j, "n_k", c.n_k);
  read_vector(j, "beta", c.beta);
  read_covariates(j, "covariates", c.covariates);
  return c;
}

GinvInvarianceConfig ginv_invariance_config_from_json(const json& j) {
  reject_unknown(j, {"reps", "seed", "workers", "n_total", "k", "beta", "covariates", "sort_column"});
  GinvInvarianceConfig c;
  read_base(j, c);
  read(j, "n_total", c.n_total);
  read(j, "k", c.k);
  read_vector(j, "beta", c.beta);
  read_covariates(j, "covariates", c.covariates);
  read(j, "sort_column", c.sort_column);
  return c;
}

}  // namespace streamstat::sim
