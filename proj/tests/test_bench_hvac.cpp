#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "dhmpc/bench_hvac.hpp"
#include "dhmpc/lp_solver.hpp"
#include "dhmpc/mpc_model.hpp"

using namespace dhmpc;

TEST_CASE("stage dimensions of the plant") {
  HvacConfig cfg;
  cfg.N = 8;
  cfg.N_sim = 1;
  auto [problem, scenario] = generate_instance(cfg);
  CHECK(problem.dims().nx == 2);
  CHECK(problem.dims().nu == 14);
  CHECK(problem.dims().nw == 6);
  CHECK(stage_dims(2, 14, 6) == std::pair<int, int>{16, 48});
  const CompactLp lp = to_compact(problem);
  CHECK(lp.n == 16);
  CHECK(lp.m == 48);
}

TEST_CASE("null economy has zero optimal cost") {
  HvacConfig cfg;
  cfg.N = 12;
  cfg.N_sim = 1;
  cfg.price_mean = 0.0;
  cfg.price_amp = 0.0;
  cfg.price_noise = 0.0;
  cfg.elec_load_mean = 0.0;
  cfg.elec_load_amp = 0.0;
  cfg.cw_load_mean = 0.0;
  cfg.cw_load_amp = 0.0;
  cfg.hw_load_mean = 0.0;
  cfg.hw_load_amp = 0.0;
  cfg.load_noise = 0.0;
  cfg.utility_bound = 1.0;
  auto [problem, scenario] = generate_instance(cfg);
  const auto sol = solve(to_compact(problem));
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(std::abs(sol.objective) <= 1e-9);
}

TEST_CASE("generated instances are admissible across seeds") {
  for (std::uint64_t seed : {0ull, 1ull, 2ull, 3ull, 4ull}) {
    HvacConfig cfg;
    cfg.N = 48;
    cfg.N_sim = 1;
    cfg.seed = seed;
    auto [problem, scenario] = generate_instance(cfg);
    CHECK(check_admissible(to_compact(problem), 1e-8).feasible);
  }
}

TEST_CASE("default desk-scale instance is admissible") {
  HvacConfig cfg;  // N = 288 at 5 minutes
  cfg.N_sim = 1;
  auto [problem, scenario] = generate_instance(cfg);
  CHECK(check_admissible(to_compact(problem), 1e-8).feasible);
}

TEST_CASE("penalty economics keep slacks at zero when capacity suffices") {
  HvacConfig cfg;
  cfg.N = 48;
  cfg.N_sim = 1;
  cfg.seed = 9;
  auto [problem, scenario] = generate_instance(cfg);
  const CompactLp lp = to_compact(problem);
  const auto sol = solve(lp);
  REQUIRE(sol.status == SolveStatus::Optimal);

  double max_slack = 0;
  for (int t = 0; t < lp.N; ++t)
    for (int c = 10; c < 14; ++c)
      max_slack = std::max(max_slack, std::abs(sol.z[t * lp.n + 2 + c]));
  CHECK(max_slack <= 1e-7);

  // Forcing the slacks to zero does not change the optimum.
  HvacConfig forced = cfg;
  forced.slack_bound_factor = 1.0;
  auto [fproblem, fscenario] = generate_instance(forced);
  std::vector<StageSpec> stages;
  for (int t = 0; t < cfg.N; ++t) {
    StageSpec s = fproblem.stage(t);
    for (int c = 10; c < 14; ++c) s.u_hi[c] = 0.0;
    stages.push_back(std::move(s));
  }
  const auto fsol = solve(to_compact(MpcProblem(std::move(stages))));
  REQUIRE(fsol.status == SolveStatus::Optimal);
  CHECK(fsol.objective == doctest::Approx(sol.objective).epsilon(1e-8));
}

TEST_CASE("profile CSV round trip is bit exact") {
  HvacConfig cfg;
  const ProfileSet a = synth_profiles(cfg, 10, 42);
  const auto path = std::filesystem::temp_directory_path() / "dhmpc_profiles_test.csv";
  save_profiles(a, path.string());
  const ProfileSet b = load_profiles(path.string());
  REQUIRE(a.size() == b.size());
  for (int t = 0; t < a.size(); ++t) {
    CHECK(a.price_elec[t] == b.price_elec[t]);
    CHECK(a.load_elec[t] == b.load_elec[t]);
    CHECK(a.load_cw[t] == b.load_cw[t]);
    CHECK(a.load_hw[t] == b.load_hw[t]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("profile CSV schema errors carry line information") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path();

  const auto bad_header = dir / "dhmpc_bad_header.csv";
  {
    std::FILE* f = std::fopen(bad_header.string().c_str(), "w");
    std::fputs("t,price,load\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_WITH_AS(load_profiles(bad_header.string()),
                       doctest::Contains("bad header"), ModelError);
  fs::remove(bad_header);

  const auto missing_col = dir / "dhmpc_missing_col.csv";
  {
    std::FILE* f = std::fopen(missing_col.string().c_str(), "w");
    std::fputs("t,price_elec,load_elec,load_cw,load_hw\n0,0.1,5.0,4.0\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_WITH_AS(load_profiles(missing_col.string()),
                       doctest::Contains("missing column load_hw"), ModelError);
  fs::remove(missing_col);

  const auto negative = dir / "dhmpc_negative.csv";
  {
    std::FILE* f = std::fopen(negative.string().c_str(), "w");
    std::fputs("t,price_elec,load_elec,load_cw,load_hw\n0,0.1,5.0,-4.0,1.0\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_WITH_AS(load_profiles(negative.string()),
                       doctest::Contains("line 2"), ModelError);
  fs::remove(negative);
}

TEST_CASE("config validation") {
  HvacConfig cfg;
  cfg.dt_min = 0;
  CHECK_THROWS_AS(cfg.validate(), ModelError);
  cfg = HvacConfig{};
  cfg.price_amp = -1;
  CHECK_THROWS_AS(cfg.validate(), ModelError);
  cfg = HvacConfig{};
  cfg.utility_bound = 1.0;  // below the electric load scale
  CHECK_THROWS_AS(cfg.validate(), ModelError);
}
