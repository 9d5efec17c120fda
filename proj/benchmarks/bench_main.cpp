#include <benchmark/benchmark.h>

#include <numbers>

#include "slnet/integrator.hpp"
#include "slnet/model.hpp"
#include "slnet/networks.hpp"
#include "slnet/theory.hpp"

using namespace slnet;

namespace {

ModelParams params(std::size_t n) {
  ModelParams p;
  p.alpha = 0.25 * std::numbers::pi;
  p.beta = 0.1 * std::numbers::pi;
  p.d0 = 1.0;
  p.N = n;
  return p;
}

CouplingSet couplings(std::size_t n) {
  DistributionSpec spec;
  return sample_couplings(spec, n);
}

void BM_MeanFieldRhs(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = params(n);
  const MeanFieldField f(p, couplings(n));
  const auto s = init_state(p, 1);
  std::vector<Complex> dz(n);
  for (auto _ : state) {
    f(s.z, dz);
    benchmark::DoNotOptimize(dz.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_MeanFieldRhs)->Arg(500)->Arg(1000)->Arg(4000);

void BM_NetworkRhs(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = params(n);
  const auto g = generate_graph_from_degrees(gaussian_degrees(20.0, 4.5, n, 8, 34, 2), 3);
  const NetworkField f(p, g);
  const auto s = init_state(p, 1);
  std::vector<Complex> dz(n);
  for (auto _ : state) {
    f(s.z, dz);
    benchmark::DoNotOptimize(dz.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.edge_count()));
}
BENCHMARK(BM_NetworkRhs)->Arg(500)->Arg(1000);

void BM_Rk4Step(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = params(n);
  const VectorField f = MeanFieldField(p, couplings(n));
  auto s = init_state(p, 1);
  Rk4Stepper stepper(n);
  double t = 0.0;
  for (auto _ : state) {
    stepper.step(f, s.z, t, 0.01);
    t += 0.01;
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_Rk4Step)->Arg(500)->Arg(1000);

void BM_SolveAmplitude(benchmark::State& state) {
  const auto p = params(1);
  double K = 0.001;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_amplitude(K, 0.9, 0.01, p));
    K = K < 0.1 ? K + 1e-5 : 0.001;
  }
}
BENCHMARK(BM_SolveAmplitude);

void BM_SelfConsistency(benchmark::State& state) {
  const auto p = params(1000);
  const auto K = couplings(1000);
  for (auto _ : state) benchmark::DoNotOptimize(solve_self_consistency(p, K));
}
BENCHMARK(BM_SelfConsistency)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
