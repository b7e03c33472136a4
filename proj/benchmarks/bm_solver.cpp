#include <benchmark/benchmark.h>

#include <random>

#include "dhmpc/bench_hvac.hpp"
#include "dhmpc/lp_solver.hpp"
#include "dhmpc/mpc_model.hpp"

namespace {

dhmpc::CompactLp hvac_lp(int N) {
  dhmpc::HvacConfig cfg;
  cfg.N = N;
  cfg.N_sim = 1;
  cfg.seed = 7;
  auto [problem, scenario] = dhmpc::generate_instance(cfg);
  return dhmpc::to_compact(problem);
}

void BM_SolveColdHvac(benchmark::State& state) {
  const dhmpc::CompactLp lp = hvac_lp(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    dhmpc::SimplexSolver solver;
    auto sol = solver.solve(lp);
    if (sol.status != dhmpc::SolveStatus::Optimal) state.SkipWithError("not optimal");
    benchmark::DoNotOptimize(sol.objective);
  }
}
BENCHMARK(BM_SolveColdHvac)->Arg(96)->Arg(288)->Unit(benchmark::kMillisecond);

void BM_ResolvePerturbedHvac(benchmark::State& state) {
  const dhmpc::CompactLp lp = hvac_lp(static_cast<int>(state.range(0)));
  dhmpc::SimplexSolver solver;
  if (solver.solve(lp).status != dhmpc::SolveStatus::Optimal) {
    state.SkipWithError("not optimal");
    return;
  }
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 10.0);
  const int nx = 2, nw = 6;
  for (auto _ : state) {
    dhmpc::CompactLp perturbed = lp;
    for (int t = 0; t < lp.N / 4; ++t) {
      for (int c : {0, 4, 5}) {
        const double delta = gauss(rng);
        perturbed.d[t * lp.m + 2 * nx + c] += delta;
        perturbed.d[t * lp.m + 2 * nx + nw + c] -= delta;
      }
    }
    auto sol = solver.resolve_new_data(perturbed);
    if (sol.status != dhmpc::SolveStatus::Optimal) state.SkipWithError("not optimal");
    benchmark::DoNotOptimize(sol.objective);
  }
}
BENCHMARK(BM_ResolvePerturbedHvac)->Arg(288)->Unit(benchmark::kMillisecond);

}  // namespace
