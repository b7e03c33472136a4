#pragma once

#include <Eigen/Core>

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace dhmpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when problem data violates a structural precondition
/// (dimension mismatch, non-finite bound, crossed bounds, ...).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dims {
  int nx = 0;  ///< states per stage
  int nu = 0;  ///< controls per stage
  int nw = 0;  ///< algebraic constraint rows per stage
  int N = 0;   ///< horizon length

  bool operator==(const Dims&) const = default;
};

/// Per-stage primal/constraint dimensions of the compact inequality form.
/// n = nx + nu, m = 4 nx + 2 nu + 2 nw.
std::pair<int, int> stage_dims(int nx, int nu, int nw);

/// Data of one stage: linear dynamics, algebraic constraints, linear costs
/// and finite box bounds.
///
///   x_i = A x_{i-1} + B u_{i-1} + v_i        (v_1 is the initial condition)
///   E x_i + F u_i = w_i
///   x_lo <= x_i <= x_hi,  u_lo <= u_i <= u_hi
///   stage cost q' x_i + r' u_i
struct StageSpec {
  Matrix A, B;       // nx x nx, nx x nu
  Matrix E, F;       // nw x nx, nw x nu
  Vector q, r;       // nx, nu
  Vector v, w;       // nx, nw
  Vector x_lo, x_hi; // nx
  Vector u_lo, u_hi; // nu

  /// Throws ModelError unless all blocks have consistent shapes, bounds are
  /// finite and lo <= hi componentwise. Returns the stage dims on success.
  Dims validate() const;
};

/// An MPC problem over a horizon of N stages sharing (nx, nu, nw).
/// Stages are held by shared pointer so time-invariant problems can share
/// one StageSpec across the horizon.
class MpcProblem {
 public:
  MpcProblem(std::vector<std::shared_ptr<const StageSpec>> stages);
  explicit MpcProblem(std::vector<StageSpec> stages);

  /// Time-invariant problem: the same stage repeated N times.
  static MpcProblem uniform(StageSpec stage, int N);

  const Dims& dims() const { return dims_; }
  int horizon() const { return dims_.N; }
  const StageSpec& stage(int i) const { return *stages_.at(i); }
  const std::shared_ptr<const StageSpec>& stage_ptr(int i) const { return stages_.at(i); }

  /// Replaces stage i (copy-on-write with respect to shared stages).
  void set_stage(int i, StageSpec s);

 private:
  std::vector<std::shared_ptr<const StageSpec>> stages_;
  Dims dims_;
};

/// Block lower-bidiagonal inequality-form LP
///
///   min p'z  s.t.  G z >= d,
///
/// with N stages, per-stage primal dimension n and row dimension m.
/// Row block i couples z_{i-1} (through G_sub[i]) and z_i (through
/// G_diag[i]); G_sub[0] is empty (there is no stage 0).
struct CompactLp {
  int N = 0;
  int n = 0;
  int m = 0;
  Vector p;  // n*N
  Vector d;  // m*N
  std::vector<Matrix> G_diag;  // N blocks, m x n
  std::vector<Matrix> G_sub;   // N blocks, m x n; [0] is 0 x 0

  int num_vars() const { return n * N; }
  int num_rows() const { return m * N; }

  /// Throws ModelError on inconsistent block shapes.
  void validate() const;

  /// Dense G (tests and tiny instances only).
  Matrix dense_G() const;

  /// G z, evaluated blockwise.
  Vector apply_G(const Vector& z) const;

  /// G' y, evaluated blockwise.
  Vector apply_Gt(const Vector& y) const;

  /// Row r of G as a dense vector of length n*N (tests / brute force).
  Vector dense_row(int r) const;
};

/// Lossless reduction of the stage-wise problem to the compact form.
/// Per stage the m rows are ordered
///   (v, -v, w, -w, x_lo, -x_hi, u_lo, -u_hi)
/// and z_i = (x_i, u_i), p_i = (q_i, r_i).
CompactLp to_compact(const MpcProblem& problem);

/// Membership test outcome for the set of admissible data.
struct AdmissibleDataFlag {
  bool feasible = false;
  Vector certificate;  ///< a feasible point when feasible, empty otherwise
};

/// Tests whether {z : G z >= d - tol} is nonempty via the solver's
/// feasibility phase. Infeasibility is a value, not an error.
AdmissibleDataFlag check_admissible(const CompactLp& lp, double tol);

}  // namespace dhmpc
