// Serial reference against the OpenMP kernels.
#include <benchmark/benchmark.h>

#include "lpeq/dividend_paths.hpp"
#include "lpeq/equilibrium.hpp"
#include "lpeq/field_solver.hpp"

using namespace lpeq;

namespace {

MarketModel tanh_model() {
  MarketModel m;
  m.agent1 = {2.0, 0.05, 0.5};
  m.agent2 = {2.0, 0.1, 0.5};
  m.horizon = 1.0;
  m.d0 = 0.0;
  m.dividend = DividendCoefficients::tanh_bounded(0.1, 0.2, 1.0, 0.4);
  m.bound_m = 2.0;
  return m;
}

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "openmp"); }

void BM_solve_fields(benchmark::State& state) {
  const MarketModel m = tanh_model();
  const Grid g = Grid::covering(m, GridSpec{});
  for (auto _ : state) {
    SolutionField f = solve_fields(m, g, 8.0, mode(state));
    benchmark::DoNotOptimize(f.a.data());
  }
  label(state);
}

void BM_dividend_paths(benchmark::State& state) {
  const MarketModel m = tanh_model();
  for (auto _ : state) {
    DividendPaths p = simulate_dividend_paths(m, 400, 10000, 7, mode(state));
    benchmark::DoNotOptimize(&p);
  }
  label(state);
}

void BM_path_rebuild(benchmark::State& state) {
  const MarketModel m = tanh_model();
  const Grid g = Grid::covering(m, GridSpec{});
  const SolutionField f = solve_fields(m, g, 8.0);
  const FieldSampler sampler(f);
  const DividendPaths d = simulate_dividend_paths(m, g.n_time, 10000, 7);
  const EquilibriumPathSet paths(sampler, m, d, {});
  for (auto _ : state) {
    double sum = 0.0;
    std::vector<double> last(paths.size());
    paths.for_each([&](std::size_t k, const EquilibriumPath& p) { last[k] = p.stock.back(); },
                   mode(state));
    for (double v : last) sum += v;
    benchmark::DoNotOptimize(sum);
  }
  label(state);
}

}  // namespace

BENCHMARK(BM_solve_fields)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dividend_paths)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_path_rebuild)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
