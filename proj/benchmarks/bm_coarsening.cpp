#include <benchmark/benchmark.h>

#include "dhmpc/bench_hvac.hpp"
#include "dhmpc/coarsening.hpp"
#include "dhmpc/lp_solver.hpp"

namespace {

void BM_CoarsenHvac(benchmark::State& state) {
  dhmpc::HvacConfig cfg;
  cfg.N = static_cast<int>(state.range(0));
  cfg.N_sim = 1;
  auto [problem, scenario] = dhmpc::generate_instance(cfg);
  const dhmpc::CompactLp lp = dhmpc::to_compact(problem);
  const auto grid = dhmpc::grid_feasibility_guard(dhmpc::GridScheme::Diffusing, lp.N, 30);
  const auto prior = dhmpc::Prior::zero(lp);
  for (auto _ : state) {
    auto coarse = dhmpc::coarsen(lp, grid, prior);
    benchmark::DoNotOptimize(coarse.lp.d.sum());
  }
}
BENCHMARK(BM_CoarsenHvac)->Arg(288)->Unit(benchmark::kMillisecond);

void BM_SolveCoarseHvac(benchmark::State& state) {
  dhmpc::HvacConfig cfg;
  cfg.N = 288;
  cfg.N_sim = 1;
  auto [problem, scenario] = dhmpc::generate_instance(cfg);
  const dhmpc::CompactLp lp = dhmpc::to_compact(problem);
  const auto grid =
      dhmpc::grid_feasibility_guard(dhmpc::GridScheme::Diffusing, lp.N, static_cast<int>(state.range(0)));
  const auto coarse = dhmpc::coarsen(lp, grid, dhmpc::Prior::zero(lp));
  for (auto _ : state) {
    dhmpc::SimplexSolver solver;
    auto sol = solver.solve(coarse.lp);
    if (sol.status != dhmpc::SolveStatus::Optimal) state.SkipWithError("not optimal");
    benchmark::DoNotOptimize(sol.objective);
  }
}
BENCHMARK(BM_SolveCoarseHvac)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace
