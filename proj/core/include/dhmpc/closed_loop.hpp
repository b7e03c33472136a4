#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dhmpc/coarsening.hpp"
#include "dhmpc/mpc_model.hpp"

namespace dhmpc {

/// Data sequences driving one closed-loop run. Series must cover the
/// simulation horizon plus the prediction horizon; the plant structure
/// (matrices and bounds) is shared through `base_stage`.
struct Scenario {
  std::shared_ptr<const StageSpec> base_stage;
  std::vector<Vector> q, r, v, w;  // per absolute stage, length >= N_sim + N
  Vector x0;
  std::uint64_t id = 0;

  int length() const { return static_cast<int>(w.size()); }
  void validate(int N_sim, int N) const;

  /// Stage t of the series as a StageSpec (v taken from the series).
  StageSpec stage_at(int t) const;
};

enum class ControllerScheme { Full, Equal, Fts, Diffusing };

const char* to_string(ControllerScheme s);
ControllerScheme parse_controller_scheme(const std::string& name);

enum class PriorPolicy { Zero, ShiftedPrevious };

struct ControllerConfig {
  ControllerScheme scheme = ControllerScheme::Full;
  int K = 0;           // ignored for Full
  bool guard = true;   // force M_2 = 2 so the first stage is never aggregated
  PriorPolicy prior = PriorPolicy::Zero;
  int horizon = 0;     // prediction horizon N

  std::string name() const;
};

struct ClosedLoopStep {
  Vector z1;          // implemented (x_1, u_1)
  Vector x_next;      // realized next state
  double cost_step = 0;
  double cost_cum = 0;
  double solve_ms = 0;
  double objective = 0;  // optimal objective of the step problem
};

struct ClosedLoopTrace {
  std::vector<ClosedLoopStep> steps;
  double cumulative_cost = 0;
  double total_solve_ms = 0;
  double mean_solve_ms() const {
    return steps.empty() ? 0.0 : total_solve_ms / static_cast<double>(steps.size());
  }
};

class StepInfeasible : public std::runtime_error {
 public:
  StepInfeasible(int step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// One exact plant update x_next = A x + B u + v_next.
Vector step_plant(const Vector& x, const Vector& u, const StageSpec& stage, const Vector& v_next);

/// Receding-horizon simulation: at each step builds the MPC problem over
/// the next N stages with the current state as initial condition, coarsens
/// per config, solves, projects, implements the first control and advances
/// the plant.
ClosedLoopTrace run_closed_loop(const Scenario& scenario, const ControllerConfig& cfg, int N_sim);

struct SchemeScenarioResult {
  std::string scheme;
  std::uint64_t scenario_id = 0;
  double cost = 0;
  double mean_solve_ms = 0;
  double total_solve_ms = 0;
};

struct SchemeComparison {
  std::vector<SchemeScenarioResult> rows;  // one per (scenario, config)

  double mean_cost(const std::string& scheme) const;
  double mean_solve_ms(const std::string& scheme) const;
  /// Relative closed-loop cost increase of `scheme` vs `reference`,
  /// averaged over scenarios.
  double relative_increase(const std::string& scheme, const std::string& reference) const;
  /// Scenarios where `scheme` has the strictly lowest cost among `group`.
  int win_count(const std::string& scheme, const std::vector<std::string>& group) const;
};

/// Runs every (scenario, config) pair; scenarios fan out across `threads`.
SchemeComparison compare_schemes(const std::vector<Scenario>& scenarios,
                                 const std::vector<ControllerConfig>& cfgs, int N_sim,
                                 int threads = 1);

}  // namespace dhmpc
