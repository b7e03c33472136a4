#include <doctest.h>

#include "dhmpc/bench_hvac.hpp"
#include "dhmpc/closed_loop.hpp"
#include "dhmpc/lp_solver.hpp"
#include "dhmpc/mpc_model.hpp"
#include "test_support.hpp"

using namespace dhmpc;
using dhmpc::testing::random_instance;

TEST_CASE("plant step is the exact affine update") {
  StageSpec s;
  s.A = Matrix::Identity(2, 2);
  s.B = Matrix::Zero(2, 3);
  s.E = Matrix::Zero(0, 2);
  s.F = Matrix::Zero(0, 3);
  s.q = Vector::Zero(2);
  s.r = Vector::Zero(3);
  s.v = Vector::Zero(2);
  s.w = Vector::Zero(0);
  s.x_lo = Vector::Constant(2, -10);
  s.x_hi = Vector::Constant(2, 10);
  s.u_lo = Vector::Constant(3, -10);
  s.u_hi = Vector::Constant(3, 10);

  const Vector x = (Vector(2) << 1.0, -2.0).finished();
  const Vector u = (Vector(3) << 0.5, 0.25, -1.0).finished();

  // A = I, B = 0, v = 0: state unchanged.
  CHECK((step_plant(x, u, s, Vector::Zero(2)) - x).cwiseAbs().maxCoeff() == 0.0);

  // A = 0, B = I (first columns), v = 0: next state is the control.
  s.A = Matrix::Zero(2, 2);
  s.B = Matrix::Zero(2, 3);
  s.B(0, 0) = 1.0;
  s.B(1, 1) = 1.0;
  const Vector xn = step_plant(x, u, s, Vector::Zero(2));
  CHECK(xn[0] == doctest::Approx(0.5));
  CHECK(xn[1] == doctest::Approx(0.25));

  CHECK_THROWS_AS(step_plant(x, Vector::Zero(2), s, Vector::Zero(2)), ModelError);
}

TEST_CASE("storage integration matches hand arithmetic") {
  // The benchmark folds the step length into per-stage energies, so the
  // storage update is x_next = x + u_charge.
  HvacConfig cfg;
  cfg.N = 4;
  cfg.N_sim = 1;
  auto [problem, scenario] = generate_instance(cfg);
  Vector u = Vector::Zero(14);
  u[4] = 12.5;   // CW charge
  u[5] = -3.25;  // HW discharge
  const Vector x = (Vector(2) << 100.0, 50.0).finished();
  const Vector xn = step_plant(x, u, *scenario.base_stage, Vector::Zero(2));
  CHECK(xn[0] == doctest::Approx(112.5));
  CHECK(xn[1] == doctest::Approx(46.75));
}

TEST_CASE("one-step closed loop equals the open-loop first stage") {
  HvacConfig cfg;
  cfg.N = 24;
  cfg.N_sim = 1;
  cfg.seed = 3;
  auto [problem, scenario] = generate_instance(cfg);

  ControllerConfig full;
  full.scheme = ControllerScheme::Full;
  full.horizon = cfg.N;
  const ClosedLoopTrace trace = run_closed_loop(scenario, full, 1);
  REQUIRE(trace.steps.size() == 1);

  const CompactLp lp = to_compact(problem);
  const auto sol = solve(lp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  const double first_stage_cost = lp.p.head(lp.n).dot(sol.z.head(lp.n));
  CHECK(trace.cumulative_cost == doctest::Approx(first_stage_cost).epsilon(1e-7));
}

TEST_CASE("identity coarsening reproduces the full-resolution trace") {
  HvacConfig cfg;
  cfg.N = 16;
  cfg.N_sim = 8;
  cfg.seed = 21;
  auto [problem, scenario] = generate_instance(cfg);

  ControllerConfig full;
  full.scheme = ControllerScheme::Full;
  full.horizon = cfg.N;
  ControllerConfig identity;
  identity.scheme = ControllerScheme::Diffusing;
  identity.K = cfg.N;  // guarded diffusing grid with K = N is the identity grid
  identity.horizon = cfg.N;

  const ClosedLoopTrace a = run_closed_loop(scenario, full, cfg.N_sim);
  const ClosedLoopTrace b = run_closed_loop(scenario, identity, cfg.N_sim);
  REQUIRE(a.steps.size() == b.steps.size());
  for (size_t t = 0; t < a.steps.size(); ++t)
    CHECK((a.steps[t].z1 - b.steps[t].z1).cwiseAbs().maxCoeff() <= 1e-7);
  CHECK(a.cumulative_cost == doctest::Approx(b.cumulative_cost).epsilon(1e-7));
}

TEST_CASE("deterministic traces") {
  HvacConfig cfg;
  cfg.N = 16;
  cfg.N_sim = 6;
  cfg.seed = 8;
  auto [problem, scenario] = generate_instance(cfg);
  ControllerConfig diff;
  diff.scheme = ControllerScheme::Diffusing;
  diff.K = 6;
  diff.horizon = cfg.N;
  const ClosedLoopTrace a = run_closed_loop(scenario, diff, cfg.N_sim);
  const ClosedLoopTrace b = run_closed_loop(scenario, diff, cfg.N_sim);
  REQUIRE(a.steps.size() == b.steps.size());
  for (size_t t = 0; t < a.steps.size(); ++t) {
    CHECK((a.steps[t].z1 - b.steps[t].z1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.steps[t].cost_step == b.steps[t].cost_step);
  }
}

TEST_CASE("trace invariants: dynamics, cost accounting, guarded stage-1 feasibility") {
  HvacConfig cfg;
  cfg.N = 20;
  cfg.N_sim = 10;
  cfg.seed = 13;
  auto [problem, scenario] = generate_instance(cfg);
  const Dims dims = scenario.base_stage->validate();

  for (ControllerScheme scheme : {ControllerScheme::Full, ControllerScheme::Equal,
                                  ControllerScheme::Diffusing}) {
    ControllerConfig cc;
    cc.scheme = scheme;
    cc.K = 5;
    cc.horizon = cfg.N;
    const ClosedLoopTrace trace = run_closed_loop(scenario, cc, cfg.N_sim);
    REQUIRE(static_cast<int>(trace.steps.size()) == cfg.N_sim);

    Vector x = scenario.x0;
    double cum = 0;
    for (int t = 0; t < cfg.N_sim; ++t) {
      const auto& step = trace.steps[t];
      const Vector x1 = step.z1.head(dims.nx);
      const Vector u1 = step.z1.tail(dims.nu);

      // stage-1 rows of the original problem hold at the implemented move
      CHECK((x1 - x).cwiseAbs().maxCoeff() <= 1e-8);
      const StageSpec st = scenario.stage_at(t);
      CHECK((st.E * x1 + st.F * u1 - st.w).cwiseAbs().maxCoeff() <= 1e-7);
      CHECK((x1 - st.x_lo).minCoeff() >= -1e-8);
      CHECK((st.x_hi - x1).minCoeff() >= -1e-8);
      CHECK((u1 - st.u_lo).minCoeff() >= -1e-8);
      CHECK((st.u_hi - u1).minCoeff() >= -1e-8);

      // dynamics consistency of the recorded transition
      const Vector expect = step_plant(x, u1, st, scenario.v.at(t + 1));
      CHECK((step.x_next - expect).cwiseAbs().maxCoeff() <= 1e-10);

      // cost accounting
      cum += scenario.q.at(t).dot(x1) + scenario.r.at(t).dot(u1);
      CHECK(step.cost_cum == doctest::Approx(cum).epsilon(1e-10));
      x = step.x_next;
    }
    CHECK(trace.cumulative_cost == doctest::Approx(cum).epsilon(1e-10));
  }
}

TEST_CASE("infeasible step raises StepInfeasible with the step index") {
  // One state pinned by the initial condition outside its box; no slacks.
  StageSpec s;
  s.A = Matrix::Identity(1, 1);
  s.B = Matrix::Zero(1, 1);
  s.E = Matrix::Zero(0, 1);
  s.F = Matrix::Zero(0, 1);
  s.q = Vector::Zero(1);
  s.r = Vector::Ones(1);
  s.v = Vector::Zero(1);
  s.w = Vector::Zero(0);
  s.x_lo = Vector::Zero(1);
  s.x_hi = Vector::Ones(1);
  s.u_lo = Vector::Zero(1);
  s.u_hi = Vector::Ones(1);

  Scenario scenario;
  scenario.base_stage = std::make_shared<const StageSpec>(s);
  scenario.x0 = Vector::Constant(1, 5.0);  // outside [0, 1]
  const int len = 8;
  scenario.q.assign(len, Vector::Zero(1));
  scenario.r.assign(len, Vector::Ones(1));
  scenario.v.assign(len, Vector::Zero(1));
  scenario.w.assign(len, Vector::Zero(0));

  ControllerConfig cc;
  cc.scheme = ControllerScheme::Full;
  cc.horizon = 4;
  try {
    run_closed_loop(scenario, cc, 2);
    FAIL("expected StepInfeasible");
  } catch (const StepInfeasible& e) {
    CHECK(e.step() == 0);
  }
}

TEST_CASE("scheme comparison aggregates") {
  HvacConfig cfg;
  cfg.N = 16;
  cfg.N_sim = 6;
  std::vector<Scenario> scenarios;
  for (int s = 0; s < 2; ++s) {
    cfg.seed = 100 + s;
    scenarios.push_back(generate_instance(cfg).second);
  }
  ControllerConfig full;
  full.scheme = ControllerScheme::Full;
  full.horizon = cfg.N;
  ControllerConfig diff;
  diff.scheme = ControllerScheme::Diffusing;
  diff.K = 6;
  diff.horizon = cfg.N;

  const SchemeComparison cmp = compare_schemes(scenarios, {full, diff}, cfg.N_sim, 2);
  REQUIRE(cmp.rows.size() == 4);
  CHECK(cmp.relative_increase("full", "full") == doctest::Approx(0.0));

  // identical configs give identical rows
  const SchemeComparison twice = compare_schemes(scenarios, {full, diff}, cfg.N_sim, 1);
  for (size_t i = 0; i < cmp.rows.size(); ++i) {
    CHECK(cmp.rows[i].scheme == twice.rows[i].scheme);
    CHECK(cmp.rows[i].cost == doctest::Approx(twice.rows[i].cost));
  }
}
