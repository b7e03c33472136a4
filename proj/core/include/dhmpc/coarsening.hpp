#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dhmpc/lp_solver.hpp"
#include "dhmpc/mpc_model.hpp"

namespace dhmpc {

enum class GridScheme { Equal, FullThenSparse, Diffusing };

const char* to_string(GridScheme s);
GridScheme parse_grid_scheme(const std::string& name);

/// Partition of the horizon {1..N} into K consecutive blocks, given by the
/// block start points M_1 = 1 < M_2 < ... < M_K (1-based, as printed).
/// Block k covers stages [M_k, M_{k+1} - 1] with M_{K+1} := N + 1.
struct CoarseGrid {
  std::vector<int> points;  // 1-based M_k, strictly increasing, M_1 = 1
  int N = 0;

  int K() const { return static_cast<int>(points.size()); }

  // 0-based stage range [begin0, end0) of block k.
  int begin0(int k) const { return points[k] - 1; }
  int end0(int k) const { return k + 1 < K() ? points[k + 1] - 1 : N; }
  int block_len(int k) const { return end0(k) - begin0(k); }

  /// Block containing 0-based stage t.
  int block_of(int t) const;

  void validate() const;
};

/// M_k = floor(N(k-1)/K + 1).
CoarseGrid grid_equal_spacing(int N, int K);

/// M_k = k.
CoarseGrid grid_full_then_sparse(int N, int K);

/// M_k = max(k, floor((N+1)^{(k-1)/K})), exact integer floor.
CoarseGrid grid_diffusing(int N, int K);

CoarseGrid make_grid(GridScheme scheme, int N, int K);

/// Forces M_2 = 2 (stage 1 is its own block) and applies the scheme to the
/// remaining horizon {2..N} for the other K-1 points, so the first-stage
/// part of a projected coarse solution always satisfies the original
/// stage-1 constraints.
CoarseGrid grid_feasibility_guard(GridScheme scheme, int N, int K);

/// The aggregation maps of a coarse grid, kept implicit: block k of T is
/// L_k^{-1/2} stacked identities of size n, likewise U with size m. Dense
/// forms exist for tests only.
struct CoarseningOperators {
  CoarseGrid grid;
  int n = 0;
  int m = 0;

  double scale(int k) const;  // L_k^{-1/2}

  Vector apply_T(const Vector& coarse) const;   // nK -> nN
  Vector apply_Tt(const Vector& full) const;    // nN -> nK
  Vector apply_U(const Vector& coarse) const;   // mK -> mN
  Vector apply_Ut(const Vector& full) const;    // mN -> mK

  Matrix dense_T() const;  // nN x nK
  Matrix dense_U() const;  // mN x mK
};

/// Primal-dual prior guess around which the coarse problem is built.
struct Prior {
  Vector z_o;       // nN
  Vector lambda_o;  // mN

  static Prior zero(const CompactLp& lp);
};

/// The coarse problem is itself a block-bidiagonal inequality LP with K
/// stages and unchanged per-stage dimensions.
struct CoarseLp {
  CompactLp lp;
  CoarseGrid grid;
  Prior prior;

  CoarseningOperators operators() const { return {grid, lp.n, lp.m}; }
};

/// Builds the coarse problem
///   p~_k = T_k'(p_k - G_{k,k}' l_k - G_{k+1,k}' l_{k+1})
///   d~_k = U_k'(d_k - G_{k,k-1} z_{k-1} - G_{k,k} z_k)
///   G~_{k,k} = U_k' G_{k,k} T_k,  G~_{k,k-1} = U_k' G_{k,k-1} T_{k-1}.
CoarseLp coarsen(const CompactLp& lp, const CoarseGrid& grid, const Prior& prior);

/// Projection of a coarse solution back to the full grid:
///   z' = z_o + T z~*,  l' = l_o + U l~*.
std::pair<Vector, Vector> project(const PrimalDualSolution& coarse_sol, const Prior& prior,
                                  const CoarseningOperators& ops);

/// Stages the coarsening leaves untouched: singleton blocks whose prior
/// dual is zero (componentwise within tol). Indices are 0-based.
struct FreeVariables {
  std::vector<int> coarse;  // block indices in 0..K-1
  std::vector<int> full;    // stage indices in 0..N-1
};

FreeVariables free_variables(const CoarseGrid& grid, const Prior& prior, double tol);

/// Data perturbation that casts coarsening as a right-hand-side change:
/// stage blocks outside S are replaced by the values the projected coarse
/// solution attains. S holds 0-based stage indices.
Vector induced_perturbation(const CompactLp& lp, const Vector& z_prime,
                            const std::vector<int>& S_full);

/// Stage residual max_{j not in S} ||d_j - G_{j,j-1} z'_{j-1} - G_{j,j} z'_j||
/// evaluated at the given projected point: a lower bound for the worst case
/// over the whole projected coarse feasible set.
double delta_estimate(const CompactLp& lp, const CoarseGrid& grid, const Prior& prior,
                      const Vector& z_prime);

/// Exact worst case of the same residual over all vertices of the coarse
/// feasible set (enumeration; coarse primal dimension capped at 12).
double delta_exact_bruteforce(const CompactLp& lp, const CoarseLp& coarse);

}  // namespace dhmpc
