#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <vector>

#include "dhmpc/mpc_model.hpp"

namespace dhmpc {

/// Bounded-variable computational form of an inequality LP
///
///   min p'z   s.t.   row_lo <= C z <= row_hi,   var_lo <= z <= var_hi.
///
/// Exact negation row pairs of G collapse into one ranged row, singleton
/// rows become variable bounds, remaining rows become one-sided ranged
/// rows. Source indices keep the mapping back to the original mN rows so
/// duals and row bases can be reconstructed exactly.
struct ComputationalForm {
  int num_vars = 0;  // structural variables (n*N)
  int num_rows = 0;  // ranged rows after folding

  Eigen::SparseMatrix<double> C;       // num_rows x num_vars, compressed
  Eigen::SparseMatrix<double> Ct;      // transpose, for row access
  Vector row_lo, row_hi;               // +-inf allowed on one side
  Vector var_lo, var_hi;               // +-inf for unbounded directions

  std::vector<int> row_src_lo;         // original row giving row_lo (>=0)
  std::vector<int> row_src_hi;         // original row giving row_hi, -1 if none
  std::vector<int> row_stage;          // stage of the source rows

  std::vector<int> var_src_lo;         // original singleton row for var_lo, -1 if none
  std::vector<int> var_src_hi;
  std::vector<double> var_src_lo_coef; // coefficient of the singleton row
  std::vector<double> var_src_hi_coef;

  // All singleton rows per variable, (original row, coefficient); the
  // tightest one wins when bounds are refreshed for new data.
  std::vector<std::vector<std::pair<int, double>>> var_lower_cands;
  std::vector<std::vector<std::pair<int, double>>> var_upper_cands;

  std::vector<int> redundant_rows;     // all-zero rows with d <= 0

  bool bound_infeasible = false;       // presolve found an empty box or range
  int infeasible_witness = -1;         // original row involved, for messages

  /// First ranged-row index whose stage is >= t (monotone, size N+1).
  std::vector<int> stage_row_start;

  /// Classifies rows of lp. Structure depends only on G; bounds depend on d.
  static ComputationalForm build(const CompactLp& lp);

  /// Recomputes row/variable bounds for new data d, keeping the structure.
  /// The caller guarantees G is unchanged.
  void refresh_bounds(const CompactLp& lp);

  /// True if the classification (not the bounds) matches `other`.
  bool same_structure(const ComputationalForm& other) const;
};

}  // namespace dhmpc
