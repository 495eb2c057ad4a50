// streamsim: Monte-Carlo runners writing CSV tables.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "streamstat/error.hpp"
#include "streamstat/sim/runners.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace streamstat;
using namespace streamstat::sim;

namespace {

struct Args {
  std::optional<std::string> config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> workers;
};

json load(const Args& a) {
  if (!a.config) return json::object();
  std::ifstream in(*a.config);
  if (!in) fail(ErrorCode::Io, "cannot open " + *a.config);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, *a.config + ": " + e.what());
  }
}

void apply(const Args& a, RunnerBase& b) {
  if (a.seed) b.seed = *a.seed;
  if (a.reps) b.reps = *a.reps;
  if (a.workers) b.workers = *a.workers;
  if (b.reps < 1) fail(ErrorCode::InvalidConfig, "reps must be >= 1");
}

template <typename Writer>
void write_csv(const Args& a, const std::string& name, Writer w) {
  const fs::path path = fs::path(a.out) / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  w(out);
  std::cout << "wrote " << path.string() << '\n';
}

int finish_checks(const Args& a, const std::vector<GeneratorCheckRow>& rows) {
  write_csv(a, "generator_check.csv", [&](std::ostream& o) { write_generator_check_csv(o, rows); });
  int rc = 0;
  for (const auto& r : rows) {
    if (!r.check.pass) {
      std::cerr << "generator check failed: " << r.runner << " column x" << r.check.column << '\n';
      rc = 1;
    }
  }
  return rc;
}

int run_power(const Args& a) {
  PowerStudyConfig c = power_config_from_json(load(a));
  apply(a, c);
  const auto cells = run_power_study(c);
  write_csv(a, "power.csv", [&](std::ostream& o) { write_power_csv(o, cells); });
  return finish_checks(a, generator_checks_outlier(c.base, c.seed));
}

int run_fpfn(const Args& a) {
  FpFnConfig c = fpfn_config_from_json(load(a));
  apply(a, c);
  const auto cells = run_fpfn_study(c);
  write_csv(a, "fpfn.csv", [&](std::ostream& o) { write_fpfn_csv(o, cells); });
  return finish_checks(a, generator_checks_outlier(c.base, c.seed));
}

int run_rmse(const Args& a) {
  RmseVsKConfig c = rmse_vs_k_config_from_json(load(a));
  apply(a, c);
  const auto rows = run_rmse_vs_k(c);
  write_csv(a, "rmse_vs_k.csv", [&](std::ostream& o) { write_rmse_vs_k_csv(o, rows); });
  return finish_checks(a, generator_checks_ee("rmse_vs_k", ee::Family::logistic(), c.beta, c.covariates, c.n_total,
                                              c.seed));
}

int run_poisson(const Args& a) {
  PoissonBiasConfig c = poisson_bias_config_from_json(load(a));
  apply(a, c);
  const auto r = run_poisson_bias(c);
  write_csv(a, "poisson_ratio.csv", [&](std::ostream& o) { write_poisson_ratio_csv(o, r); });
  write_csv(a, "poisson_detail.csv", [&](std::ostream& o) { write_poisson_detail_csv(o, r); });
  write_csv(a, "poisson_reps.csv", [&](std::ostream& o) { write_poisson_reps_csv(o, r); });
  const std::size_t n = c.k * (c.n_k.empty() ? 0 : c.n_k.back());
  return finish_checks(a, generator_checks_ee("poisson_bias", ee::Family::poisson(), c.beta, c.covariates, n, c.seed));
}

int run_ginv(const Args& a) {
  GinvInvarianceConfig c = ginv_invariance_config_from_json(load(a));
  apply(a, c);
  const auto r = run_ginv_invariance(c);
  write_csv(a, "ginv_invariance.csv", [&](std::ostream& o) { write_ginv_invariance_csv(o, r); });
  return finish_checks(a, generator_checks_ee("ginv_invariance", ee::Family::logistic(), c.beta, c.covariates,
                                              c.n_total, c.seed));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo studies for streaming regression and estimating equations"};
  app.require_subcommand(1);

  Args args;
  struct Runner {
    std::string name;
    std::string help;
    std::function<int(const Args&)> run;
  };
  const std::vector<Runner> runners{
      {"power", "Size and power of the global outlier F tests", run_power},
      {"fpfn", "False positives and negatives of the per-observation outlier tests", run_fpfn},
      {"rmse_vs_k", "Terminal CEE and CUEE RMSE against the number of chunks", run_rmse},
      {"poisson_bias", "Bias and RMSE ratios of CEE and CUEE against the pooled Poisson fit", run_poisson},
      {"ginv_invariance", "CUEE under two generalized inverses on rank-deficient chunks", run_ginv},
  };
  std::vector<CLI::App*> subs;
  for (const Runner& r : runners) {
    auto* sub = app.add_subcommand(r.name, r.help);
    sub->add_option("--config", args.config, "Runner config JSON")->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "Output directory")->required();
    sub->add_option("--seed", args.seed, "Master seed");
    sub->add_option("--reps", args.reps, "Replicates per cell");
    sub->add_option("--workers", args.workers, "Worker threads (default: STREAMSTAT_THREADS or hardware)");
    subs.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(args.out);
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (*subs[i]) return runners[i].run(args);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
