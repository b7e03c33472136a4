#include "dhmpc/closed_loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

namespace dhmpc {

void Scenario::validate(int N_sim, int N) const {
  if (!base_stage) throw ModelError("scenario: missing base stage");
  const int need = N_sim + N;
  if (static_cast<int>(q.size()) < need || static_cast<int>(r.size()) < need ||
      static_cast<int>(v.size()) < need || static_cast<int>(w.size()) < need)
    throw ModelError("scenario: series must cover N_sim + N stages");
  if (x0.size() != base_stage->q.size()) throw ModelError("scenario: x0 has wrong size");
}

StageSpec Scenario::stage_at(int t) const {
  StageSpec s = *base_stage;
  s.q = q.at(t);
  s.r = r.at(t);
  s.v = v.at(t);
  s.w = w.at(t);
  return s;
}

const char* to_string(ControllerScheme s) {
  switch (s) {
    case ControllerScheme::Full: return "full";
    case ControllerScheme::Equal: return "equal";
    case ControllerScheme::Fts: return "fts";
    case ControllerScheme::Diffusing: return "diffusing";
  }
  return "unknown";
}

ControllerScheme parse_controller_scheme(const std::string& name) {
  if (name == "full") return ControllerScheme::Full;
  if (name == "equal") return ControllerScheme::Equal;
  if (name == "fts" || name == "full_then_sparse") return ControllerScheme::Fts;
  if (name == "diffusing") return ControllerScheme::Diffusing;
  throw ModelError("unknown controller scheme: " + name);
}

std::string ControllerConfig::name() const {
  std::string out = to_string(scheme);
  if (scheme != ControllerScheme::Full) {
    out += "-K" + std::to_string(K);
    if (!guard) out += "-noguard";
  }
  if (prior == PriorPolicy::ShiftedPrevious) out += "-shiftprior";
  return out;
}

Vector step_plant(const Vector& x, const Vector& u, const StageSpec& stage,
                  const Vector& v_next) {
  if (x.size() != stage.A.rows() || u.size() != stage.B.cols() || v_next.size() != x.size())
    throw ModelError("step_plant: dimension mismatch");
  return stage.A * x + stage.B * u + v_next;
}

namespace {

GridScheme to_grid_scheme(ControllerScheme s) {
  switch (s) {
    case ControllerScheme::Equal: return GridScheme::Equal;
    case ControllerScheme::Fts: return GridScheme::FullThenSparse;
    case ControllerScheme::Diffusing: return GridScheme::Diffusing;
    case ControllerScheme::Full: break;
  }
  throw ModelError("full resolution has no grid");
}

/// Previous step's projection shifted one stage earlier; the last stage is
/// repeated to fill the tail.
void shift_prior(Prior& prior, int n, int m, int N) {
  if (prior.z_o.size() == 0) return;
  for (int i = 0; i + 1 < N; ++i) {
    prior.z_o.segment(static_cast<Eigen::Index>(i) * n, n) =
        prior.z_o.segment(static_cast<Eigen::Index>(i + 1) * n, n);
    prior.lambda_o.segment(static_cast<Eigen::Index>(i) * m, m) =
        prior.lambda_o.segment(static_cast<Eigen::Index>(i + 1) * m, m);
  }
}

}  // namespace

ClosedLoopTrace run_closed_loop(const Scenario& scenario, const ControllerConfig& cfg,
                                int N_sim) {
  const int N = cfg.horizon;
  if (N < 1 || N_sim < 1) throw ModelError("run_closed_loop: horizons must be >= 1");
  scenario.validate(N_sim, N);
  const Dims dims = scenario.base_stage->validate();
  const int nx = dims.nx;
  const int n = nx + dims.nu;

  CoarseGrid grid;
  const bool coarse_mode = cfg.scheme != ControllerScheme::Full;
  if (coarse_mode) {
    grid = cfg.guard ? grid_feasibility_guard(to_grid_scheme(cfg.scheme), N, cfg.K)
                     : make_grid(to_grid_scheme(cfg.scheme), N, cfg.K);
  }

  SimplexSolver solver;
  ClosedLoopTrace trace;
  trace.steps.reserve(N_sim);

  Vector x = scenario.x0;
  Prior carried;  // previous projection, for the shifted-prior policy

  for (int t = 0; t < N_sim; ++t) {
    std::vector<StageSpec> stages;
    stages.reserve(N);
    for (int s = 0; s < N; ++s) stages.push_back(scenario.stage_at(t + s));
    stages[0].v = x;  // current state enters through the initial-condition rows
    const MpcProblem window(std::move(stages));
    const CompactLp lp = to_compact(window);

    ClosedLoopStep step;
    const auto t0 = std::chrono::steady_clock::now();

    Vector z1;
    if (!coarse_mode) {
      const PrimalDualSolution sol = solver.solve(lp);
      if (sol.status == SolveStatus::Infeasible)
        throw StepInfeasible(t, "closed loop: step " + std::to_string(t) + " infeasible");
      if (sol.status != SolveStatus::Optimal)
        throw ModelError("closed loop: step " + std::to_string(t) +
                         " solver failure: " + to_string(sol.status));
      z1 = sol.z.head(n);
      step.objective = sol.objective;
    } else {
      Prior prior;
      if (cfg.prior == PriorPolicy::ShiftedPrevious && carried.z_o.size() == lp.num_vars()) {
        prior = carried;
        shift_prior(prior, lp.n, lp.m, lp.N);
      } else {
        prior = Prior::zero(lp);
      }
      const CoarseLp coarse = coarsen(lp, grid, prior);
      const PrimalDualSolution csol = solver.solve(coarse.lp);
      if (csol.status == SolveStatus::Infeasible)
        throw StepInfeasible(t, "closed loop: coarse step " + std::to_string(t) + " infeasible");
      if (csol.status != SolveStatus::Optimal)
        throw ModelError("closed loop: step " + std::to_string(t) +
                         " solver failure: " + to_string(csol.status));
      const auto [z_prime, lambda_prime] = project(csol, prior, coarse.operators());
      z1 = z_prime.head(n);
      step.objective = lp.p.dot(z_prime);
      if (cfg.prior == PriorPolicy::ShiftedPrevious) {
        carried.z_o = z_prime;
        carried.lambda_o = lambda_prime;
      }
    }

    const auto t1 = std::chrono::steady_clock::now();
    step.solve_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

    const Vector u1 = z1.tail(dims.nu);
    const Vector p_t = [&] {
      Vector p(n);
      p.head(nx) = scenario.q.at(t);
      p.tail(dims.nu) = scenario.r.at(t);
      return p;
    }();
    step.z1 = z1;
    step.cost_step = p_t.dot(z1);
    trace.cumulative_cost += step.cost_step;
    step.cost_cum = trace.cumulative_cost;
    trace.total_solve_ms += step.solve_ms;

    x = step_plant(x, u1, scenario.stage_at(t), scenario.v.at(t + 1));
    step.x_next = x;
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

double SchemeComparison::mean_cost(const std::string& scheme) const {
  double acc = 0;
  int count = 0;
  for (const auto& row : rows)
    if (row.scheme == scheme) {
      acc += row.cost;
      ++count;
    }
  return count ? acc / count : 0.0;
}

double SchemeComparison::mean_solve_ms(const std::string& scheme) const {
  double acc = 0;
  int count = 0;
  for (const auto& row : rows)
    if (row.scheme == scheme) {
      acc += row.mean_solve_ms;
      ++count;
    }
  return count ? acc / count : 0.0;
}

double SchemeComparison::relative_increase(const std::string& scheme,
                                           const std::string& reference) const {
  double acc = 0;
  int count = 0;
  for (const auto& row : rows) {
    if (row.scheme != scheme) continue;
    for (const auto& ref : rows) {
      if (ref.scheme == reference && ref.scenario_id == row.scenario_id) {
        acc += (row.cost - ref.cost) / std::abs(ref.cost);
        ++count;
        break;
      }
    }
  }
  return count ? acc / count : 0.0;
}

int SchemeComparison::win_count(const std::string& scheme,
                                const std::vector<std::string>& group) const {
  int wins = 0;
  std::vector<std::uint64_t> ids;
  for (const auto& row : rows)
    if (std::find(ids.begin(), ids.end(), row.scenario_id) == ids.end())
      ids.push_back(row.scenario_id);
  for (std::uint64_t id : ids) {
    double mine = std::numeric_limits<double>::infinity();
    double best_other = std::numeric_limits<double>::infinity();
    for (const auto& row : rows) {
      if (row.scenario_id != id) continue;
      if (row.scheme == scheme) mine = row.cost;
      else if (std::find(group.begin(), group.end(), row.scheme) != group.end())
        best_other = std::min(best_other, row.cost);
    }
    if (mine < best_other) ++wins;
  }
  return wins;
}

SchemeComparison compare_schemes(const std::vector<Scenario>& scenarios,
                                 const std::vector<ControllerConfig>& cfgs, int N_sim,
                                 int threads) {
  if (scenarios.empty()) throw ModelError("compare_schemes: needs at least one scenario");
  const int total = static_cast<int>(scenarios.size());
  const int nthreads = std::max(1, std::min(threads, total));

  std::vector<std::vector<SchemeScenarioResult>> per_scenario(total);
  auto worker = [&](int w) {
    for (int i = w; i < total; i += nthreads) {
      for (const ControllerConfig& cfg : cfgs) {
        const ClosedLoopTrace trace = run_closed_loop(scenarios[i], cfg, N_sim);
        SchemeScenarioResult row;
        row.scheme = cfg.name();
        row.scenario_id = scenarios[i].id;
        row.cost = trace.cumulative_cost;
        row.mean_solve_ms = trace.mean_solve_ms();
        row.total_solve_ms = trace.total_solve_ms;
        per_scenario[i].push_back(std::move(row));
      }
    }
  };

  if (nthreads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nthreads; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }

  SchemeComparison out;
  for (auto& rows : per_scenario)
    for (auto& row : rows) out.rows.push_back(std::move(row));
  return out;
}

}  // namespace dhmpc
