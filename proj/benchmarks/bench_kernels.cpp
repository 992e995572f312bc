// Inner loops: copula log density, sampling, bin correlations and the two tests.

#include <benchmark/benchmark.h>

#include "sacheck/copula.hpp"
#include "sacheck/model_select.hpp"
#include "sacheck/sa_tests.hpp"

using namespace sacheck;

namespace {

std::vector<double> uniforms(std::size_t n, Rng& r) {
  std::vector<double> v(n);
  for (auto& x : v) x = r.uniform();
  return v;
}

void BM_LogDensityEta(benchmark::State& state) {
  Rng r(1);
  const auto pairs = clayton::prepare(sample(CopulaParam::clayton(2.0), 1000, r));
  for (auto _ : state) {
    double total = 0.0;
    for (const auto& p : pairs) total += clayton::log_density_eta(p, 0.7);
    benchmark::DoNotOptimize(total);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pairs.size()));
}
BENCHMARK(BM_LogDensityEta);

void BM_Sample(benchmark::State& state) {
  Rng r(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample(CopulaParam::clayton(2.0), n, r));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sample)->Arg(350)->Arg(50000);

void BM_Spearman(benchmark::State& state) {
  Rng r(3);
  const auto pairs = sample(CopulaParam::clayton(2.0), static_cast<std::size_t>(state.range(0)), r);
  for (auto _ : state) benchmark::DoNotOptimize(spearman_rho(pairs));
}
BENCHMARK(BM_Spearman)->Arg(117)->Arg(1000);

void BM_PermutationTest(benchmark::State& state) {
  Rng r(4);
  const auto U = sample(CopulaParam::clayton(2.0), 350, r);
  const auto eta = uniforms(U.size(), r);
  const auto K = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(permutation_test(U, eta, K, 500, 0.05, r));
}
BENCHMARK(BM_PermutationTest)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_ChisqTest(benchmark::State& state) {
  Rng r(5);
  const auto U = sample(CopulaParam::clayton(2.0), 350, r);
  const auto eta = uniforms(U.size(), r);
  for (auto _ : state) benchmark::DoNotOptimize(chisq_test(U, eta, 3, 0.05));
}
BENCHMARK(BM_ChisqTest);

void BM_Criteria(benchmark::State& state) {
  Rng r(6);
  DrawsMatrix d;
  d.joint = Eigen::MatrixXd::NullaryExpr(50, 500, [&] { return -2.0 * r.uniform(); });
  d.m1 = d.joint / 2;
  d.m2 = d.joint / 3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cvml(d));
    benchmark::DoNotOptimize(ccvml(d));
    benchmark::DoNotOptimize(waic(d));
  }
}
BENCHMARK(BM_Criteria);

}  // namespace

BENCHMARK_MAIN();
