#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dhmpc/computational_form.hpp"
#include "dhmpc/mpc_model.hpp"

namespace dhmpc {

/// Row index set B with G[B,:] square and nonsingular.
struct Basis {
  std::vector<int> rows;  // sorted, |rows| == n*N

  bool operator==(const Basis&) const = default;
};

enum class SolveStatus {
  Optimal,
  Infeasible,
  Unbounded,
  NumericalFailure,
};

const char* to_string(SolveStatus s);

struct PrimalDualSolution {
  Vector z;            // n*N
  Vector lambda;       // m*N, >= 0 at optimality
  Basis basis;         // optimal basis (Optimal status only)
  double objective = 0.0;
  SolveStatus status = SolveStatus::NumericalFailure;
  int iterations = 0;
};

/// Residuals of the optimality system for (z, lambda): primal feasibility,
/// dual feasibility, complementarity and stationarity p = G'lambda.
struct KktResiduals {
  double primal = 0.0;          // max(0, d - Gz) in inf norm
  double dual = 0.0;            // max(0, -lambda) in inf norm
  double complementarity = 0.0; // max |lambda_r (Gz - d)_r|
  double stationarity = 0.0;    // ||p - G'lambda||_inf
};

KktResiduals kkt_residuals(const CompactLp& lp, const Vector& z, const Vector& lambda);

/// Thrown by extract_basis when no nonsingular completion exists among the
/// active rows (tolerance too loose, or rank-deficient active set).
class DegenerateSelectionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown by brute_force_solve above its enumeration cap.
class TooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SolverOptions {
  double feas_tol = 1e-8;    // scaled by (1 + ||d||_inf)
  double opt_tol = 1e-8;     // scaled by (1 + ||p||_inf)
  double pivot_tol = 1e-10;
  int refactor_interval = 100;
  int stall_limit = 500;     // degenerate pivots before Bland's rule
  long max_iterations = -1;  // -1: 200 * (rows + vars) + 2000
  bool warm_start = true;    // reuse the retained basis when structure matches
};

/// Bounded-variable revised simplex over the computational form of a
/// block-banded inequality LP. Holds mutable workspace: one instance per
/// thread; the retained basis warm-starts subsequent solves on problems
/// with the same constraint structure.
class SimplexSolver {
 public:
  explicit SimplexSolver(SolverOptions opts = {});
  ~SimplexSolver();
  SimplexSolver(SimplexSolver&&) noexcept;
  SimplexSolver& operator=(SimplexSolver&&) noexcept;
  SimplexSolver(const SimplexSolver&) = delete;
  SimplexSolver& operator=(const SimplexSolver&) = delete;

  /// Primal simplex (composite phase 1 + phase 2). Warm-starts from the
  /// retained basis when available, compatible and enabled.
  PrimalDualSolution solve(const CompactLp& lp);

  /// Re-optimization after a change of d with p and G unchanged: dual
  /// simplex from the retained basis (which stays dual feasible). Falls
  /// back to the primal path when no compatible basis is retained.
  PrimalDualSolution resolve_new_data(const CompactLp& lp);

  /// Feasibility phase only (objective ignored).
  AdmissibleDataFlag find_feasible(const CompactLp& lp, double tol);

  /// Opaque basis state for deterministic re-solves from a fixed start.
  struct WarmState {
    std::vector<std::uint8_t> vstat;
    std::vector<int> basic;
  };
  WarmState snapshot() const;
  void restore(const WarmState& state);

  void clear_warm_state();
  bool has_warm_state() const;

  const SolverOptions& options() const { return opts_; }
  SolverOptions& options() { return opts_; }

 private:
  struct Impl;
  SolverOptions opts_;
  std::unique_ptr<Impl> impl_;
};

/// Convenience one-shot solve with default options.
PrimalDualSolution solve(const CompactLp& lp);

/// The basic solution map of Eq-style row bases: the unique y with
/// G[B,:] y = data[B]. Not necessarily feasible or optimal.
Vector basic_solution(const CompactLp& lp, const Basis& basis, const Vector& data);

/// Selects n*N independent rows active at z that contain every row with
/// lambda_r > tol, preferring lower row indices. Throws
/// DegenerateSelectionFailure when impossible.
Basis extract_basis(const CompactLp& lp, const Vector& z, const Vector& lambda, double tol);

/// Exhaustive oracle: enumerates all n*N-row subsets (m*N <= 24), keeps
/// nonsingular + feasible basic solutions, returns the cost-minimal one
/// with a complementary dual. Intended for tiny instances and tests.
PrimalDualSolution brute_force_solve(const CompactLp& lp);

/// All optimal bases of a tiny instance in the basic-optimal sense: the
/// basic solution is feasible and attains the optimal objective.
std::vector<Basis> enumerate_optimal_bases(const CompactLp& lp, double tol = 1e-8);

}  // namespace dhmpc
