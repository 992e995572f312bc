// Model fits and one full replicate of the split-sample check.

#include <benchmark/benchmark.h>

#include "sacheck/calibration.hpp"
#include "sacheck/marginal.hpp"
#include "sacheck/model_select.hpp"
#include "sacheck/sa_tests.hpp"
#include "sacheck/scenario.hpp"

using namespace sacheck;

namespace {

Dataset scenario_data(ScenarioId id, std::size_t n) {
  Rng r(11);
  return Scenario(id).generate(n, r);
}

std::vector<UnitPair> training_pits(const Dataset& d) {
  const auto m1 = MarginalFit::fit(d.X, d.y1);
  const auto m2 = MarginalFit::fit(d.X, d.y2);
  const auto u1 = m1.training_pit();
  const auto u2 = m2.training_pit();
  std::vector<UnitPair> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = {u1[i], u2[i]};
  return out;
}

void BM_MarginalFit(benchmark::State& state) {
  const auto d = scenario_data(ScenarioId::Sc1, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(MarginalFit::fit(d.X, d.y1));
}
BENCHMARK(BM_MarginalFit)->Arg(325)->Arg(650)->Unit(benchmark::kMillisecond);

void BM_FitConstant(benchmark::State& state) {
  const auto d = scenario_data(ScenarioId::Sc1, 650);
  const auto pairs = training_pits(d);
  for (auto _ : state) benchmark::DoNotOptimize(fit_constant(pairs));
}
BENCHMARK(BM_FitConstant)->Unit(benchmark::kMicrosecond);

void BM_FitLocalLikelihood(benchmark::State& state) {
  const auto d = scenario_data(ScenarioId::Sc2, 325);
  const auto pairs = training_pits(d);
  for (auto _ : state) benchmark::DoNotOptimize(fit_local_likelihood(d.X, pairs));
}
BENCHMARK(BM_FitLocalLikelihood)->Unit(benchmark::kMillisecond);

void BM_FitSingleIndex(benchmark::State& state) {
  const auto d = scenario_data(ScenarioId::Sc2, static_cast<std::size_t>(state.range(0)));
  const auto pairs = training_pits(d);
  for (auto _ : state) benchmark::DoNotOptimize(fit_single_index(d.X, pairs));
}
BENCHMARK(BM_FitSingleIndex)->Arg(325)->Arg(650)->Unit(benchmark::kMillisecond);

void BM_SaCheckReplicate(benchmark::State& state) {
  const auto d = scenario_data(ScenarioId::Sc2, 500);
  SaCheckConfig cfg;
  cfg.seed = 3;
  for (auto _ : state) benchmark::DoNotOptimize(run_sa_check(d, cfg));
}
BENCHMARK(BM_SaCheckReplicate)->Unit(benchmark::kMillisecond);

void BM_BootstrapDraws(benchmark::State& state) {
  const auto d = scenario_data(ScenarioId::Sc1, 500);
  const auto fitter = make_resample_fitter(d, ModelKind::Full, {});
  Rng r(4);
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_draws(d, d, fitter, 5, r));
}
BENCHMARK(BM_BootstrapDraws)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
