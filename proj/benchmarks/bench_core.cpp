#include <benchmark/benchmark.h>
#include <smoguard/config.hpp>

#include <random>

using namespace smoguard;

namespace {

Mat random_matrix(int r, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

void BM_PseudoInverse(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const Mat a = random_matrix(n, n, 1);
  for (auto _ : st) benchmark::DoNotOptimize(pseudo_inverse(a));
}
BENCHMARK(BM_PseudoInverse)->Arg(4)->Arg(9)->Arg(32);

void BM_MatrixExponential(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const Mat a = random_matrix(n, n, 2);
  for (auto _ : st) benchmark::DoNotOptimize(matrix_exponential(a, 1.0));
}
BENCHMARK(BM_MatrixExponential)->Arg(5)->Arg(9)->Arg(32);

void BM_ObserverDerivative(benchmark::State& st) {
  const Scenario sc = table1_scenario();
  const Design d = prepare_design(sc);
  const int m = d.sys.m(), p = d.sys.p;
  ObserverState obs{Vec::Ones(m), Vec::Ones(p), Vec::Zero(p)};
  const Vec u = Vec::Ones(d.sys.ext.B.cols()), y = Vec::Zero(p);
  for (auto _ : st) benchmark::DoNotOptimize(observer_derivative(obs, u, y, d.sys, sc.observer));
}
BENCHMARK(BM_ObserverDerivative);

void BM_DesignEnumeration(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(enumerate_designs(PlatoonParams{}));
}
BENCHMARK(BM_DesignEnumeration)->Unit(benchmark::kMillisecond);

void BM_HealthyRun(benchmark::State& st) {
  const Scenario sc = table1_scenario();
  const Design d = prepare_design(sc);
  SimConfig cfg;
  cfg.horizon = static_cast<double>(st.range(0));
  cfg.log_every = static_cast<int>(st.range(1));
  cfg.integrator = st.range(2) ? Integrator::rk4 : Integrator::euler;
  for (auto _ : st) benchmark::DoNotOptimize(run(sc, d, cfg));
  st.counters["steps/s"] = benchmark::Counter(cfg.horizon / cfg.dt * static_cast<double>(st.iterations()),
                                              benchmark::Counter::kIsRate);
}
BENCHMARK(BM_HealthyRun)
    ->Args({60, 1, 0})
    ->Args({60, 1000, 0})
    ->Args({60, 1000, 1})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
