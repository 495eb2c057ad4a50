#include <benchmark/benchmark.h>

#include "streamstat/ee_stream.hpp"
#include "streamstat/lm_diag.hpp"
#include "streamstat/lm_stream.hpp"
#include "streamstat/sim/generators.hpp"

using namespace streamstat;

namespace {

sim::EeDataset logistic_data(std::size_t n, std::size_t p) {
  sim::Rng rng = sim::make_rng(7, 0);
  const std::vector<sim::CovariateSpec> covs(p - 1, sim::CovariateSpec::normal());
  return sim::gen_ee_dataset(ee::Family::logistic(), Vector::Constant(static_cast<Eigen::Index>(p), 0.3), covs, n,
                             rng);
}

void BM_LmUpdate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = static_cast<std::size_t>(state.range(1));
  const sim::EeDataset d = logistic_data(n, p);
  lm::LmState st = lm::lm_update(lm::LmState::empty(p), lm::summarize_chunk(d.x, d.y));
  for (auto _ : state) {
    const lm::LmState next = lm::lm_update(st, lm::summarize_chunk(d.x, d.y));
    benchmark::DoNotOptimize(next.beta.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_LmUpdate)->Args({1000, 5})->Args({10000, 20});

void BM_IrlsSolve(benchmark::State& state) {
  const sim::EeDataset d = logistic_data(static_cast<std::size_t>(state.range(0)), 6);
  const ee::Family fam = ee::Family::logistic();
  for (auto _ : state) {
    const ee::SubsetFit fit = ee::irls_solve(d.x, d.y, fam, ee::IrlsConfig{});
    benchmark::DoNotOptimize(fit.beta_sub.data());
  }
}
BENCHMARK(BM_IrlsSolve)->Arg(200)->Arg(2000);

void BM_CueeUpdate(benchmark::State& state) {
  const sim::EeDataset d = logistic_data(2000, 6);
  const ee::Family fam = ee::Family::logistic();
  const ee::CueeState start = ee::cuee_update(ee::CueeState::empty(6), d.x, d.y, fam, ee::CueeOptions{});
  for (auto _ : state) {
    const ee::CueeState next = ee::cuee_update(start, d.x, d.y, fam, ee::CueeOptions{});
    benchmark::DoNotOptimize(next.beta_tilde.data());
  }
}
BENCHMARK(BM_CueeUpdate);

void BM_GammaWhiten(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const sim::EeDataset hist = logistic_data(5000, 5);
  const sim::EeDataset cur = logistic_data(n, 5);
  const lm::LmState prev = lm::lm_update(lm::LmState::empty(5), lm::summarize_chunk(hist.x, hist.y));
  const diag::PredictiveResiduals pr = diag::predictive_residuals(prev, cur.x, cur.y);
  for (auto _ : state) {
    const Vector e = diag::gamma_whiten(prev, cur.x, pr.e_check);
    benchmark::DoNotOptimize(e.data());
  }
}
BENCHMARK(BM_GammaWhiten)->Arg(100)->Arg(500);

}  // namespace

BENCHMARK_MAIN();
