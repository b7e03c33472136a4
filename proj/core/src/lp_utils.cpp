#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/SparseLU>

#include "dhmpc/lp_solver.hpp"

namespace dhmpc {

namespace {

Eigen::SparseMatrix<double> basis_matrix(const CompactLp& lp, const Basis& basis) {
  const int nv = lp.num_vars();
  if (static_cast<int>(basis.rows.size()) != nv)
    throw ModelError("basis must have n*N rows");
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < nv; ++k) {
    const int r = basis.rows[k];
    if (r < 0 || r >= lp.num_rows()) throw ModelError("basis row out of range");
    const int i = r / lp.m;
    const int l = r % lp.m;
    for (int c = 0; c < lp.n; ++c) {
      if (i > 0 && lp.G_sub[i](l, c) != 0.0)
        trips.emplace_back(k, (i - 1) * lp.n + c, lp.G_sub[i](l, c));
      if (lp.G_diag[i](l, c) != 0.0) trips.emplace_back(k, i * lp.n + c, lp.G_diag[i](l, c));
    }
  }
  Eigen::SparseMatrix<double> GB(nv, nv);
  GB.setFromTriplets(trips.begin(), trips.end());
  GB.makeCompressed();
  return GB;
}

/// Row-echelon accumulator for greedy independent-row selection.
class RankTracker {
 public:
  explicit RankTracker(int dim) : dim_(dim) {}

  int rank() const { return static_cast<int>(rows_.size()); }

  /// Tries to add `row`; returns false if it is (numerically) dependent.
  bool add(Vector row) {
    for (size_t k = 0; k < rows_.size(); ++k) row -= rows_[k] * row[pivots_[k]];
    int piv;
    const double mx = row.cwiseAbs().maxCoeff(&piv);
    if (mx <= 1e-10 * scale_) return false;
    row /= row[piv];
    rows_.push_back(std::move(row));
    pivots_.push_back(piv);
    return true;
  }

  void observe_scale(const Vector& row) { scale_ = std::max(scale_, row.cwiseAbs().maxCoeff()); }

 private:
  int dim_;
  double scale_ = 1.0;
  std::vector<Vector> rows_;
  std::vector<int> pivots_;
};

/// Dense Gaussian elimination with partial pivoting and a relative rank
/// threshold; returns false when singular. A and b are clobbered.
bool dense_solve(Matrix& A, Vector& b) {
  const int n = static_cast<int>(A.rows());
  const double scale = std::max(A.cwiseAbs().maxCoeff(), 1e-300);
  for (int c = 0; c < n; ++c) {
    int p = c;
    double best = std::abs(A(c, c));
    for (int i = c + 1; i < n; ++i)
      if (std::abs(A(i, c)) > best) {
        best = std::abs(A(i, c));
        p = i;
      }
    if (best <= 1e-11 * scale) return false;
    if (p != c) {
      A.row(p).swap(A.row(c));
      std::swap(b[p], b[c]);
    }
    for (int i = c + 1; i < n; ++i) {
      const double l = A(i, c) / A(c, c);
      if (l == 0.0) continue;
      A.row(i).tail(n - c) -= l * A.row(c).tail(n - c);
      b[i] -= l * b[c];
    }
  }
  for (int c = n - 1; c >= 0; --c) {
    double s = b[c];
    for (int k = c + 1; k < n; ++k) s -= A(c, k) * b[k];
    b[c] = s / A(c, c);
  }
  return true;
}

struct Enumerator {
  const CompactLp& lp;
  int nv, mr;
  std::vector<Vector> rows_dense;
  double feas_tol;

  explicit Enumerator(const CompactLp& problem)
      : lp(problem), nv(problem.num_vars()), mr(problem.num_rows()) {
    lp.validate();
    if (mr > 24) throw TooLarge("brute force enumeration capped at m*N <= 24");
    if (nv > mr) throw ModelError("more variables than rows: no square basis exists");
    rows_dense.reserve(mr);
    for (int r = 0; r < mr; ++r) rows_dense.push_back(lp.dense_row(r));
    feas_tol = 1e-8 * (1.0 + lp.d.cwiseAbs().maxCoeff());
  }

  /// Calls fn(rows, z) for every nonsingular subset whose basic solution is
  /// feasible.
  template <typename Fn>
  void for_each_feasible(Fn&& fn) const {
    std::vector<int> comb(nv);
    std::iota(comb.begin(), comb.end(), 0);
    Matrix A(nv, nv);
    Vector b(nv), z(nv);
    while (true) {
      for (int k = 0; k < nv; ++k) {
        A.row(k) = rows_dense[comb[k]];
        b[k] = lp.d[comb[k]];
      }
      z = b;
      Matrix Awork = A;
      if (dense_solve(Awork, z)) {
        bool feasible = true;
        for (int r = 0; r < mr && feasible; ++r)
          feasible = rows_dense[r].dot(z) >= lp.d[r] - feas_tol;
        if (feasible) fn(comb, z);
      }
      // next combination (lexicographic)
      int i = nv - 1;
      while (i >= 0 && comb[i] == mr - nv + i) --i;
      if (i < 0) break;
      ++comb[i];
      for (int k = i + 1; k < nv; ++k) comb[k] = comb[k - 1] + 1;
    }
  }
};

}  // namespace

Vector basic_solution(const CompactLp& lp, const Basis& basis, const Vector& data) {
  if (data.size() != lp.num_rows()) throw ModelError("basic_solution: data must have m*N entries");
  Eigen::SparseMatrix<double> GB = basis_matrix(lp, basis);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(GB);
  lu.factorize(GB);
  if (lu.info() != Eigen::Success) throw ModelError("basic_solution: singular basis");
  Vector dB(lp.num_vars());
  for (int k = 0; k < lp.num_vars(); ++k) dB[k] = data[basis.rows[k]];
  return lu.solve(dB);
}

Basis extract_basis(const CompactLp& lp, const Vector& z, const Vector& lambda, double tol) {
  lp.validate();
  const int nv = lp.num_vars();
  const int mr = lp.num_rows();
  if (z.size() != nv || lambda.size() != mr)
    throw ModelError("extract_basis: bad z or lambda size");
  const double act_tol = std::max(tol, 1e-12) * (1.0 + lp.d.cwiseAbs().maxCoeff());

  const Vector slack = lp.apply_G(z) - lp.d;
  std::vector<int> required, optional;
  for (int r = 0; r < mr; ++r) {
    const bool active = std::abs(slack[r]) <= act_tol;
    if (lambda[r] > tol) {
      if (!active)
        throw ModelError("extract_basis: positive multiplier on an inactive row");
      required.push_back(r);
    } else if (active) {
      optional.push_back(r);
    }
  }

  RankTracker tracker(nv);
  for (int r : required) tracker.observe_scale(lp.dense_row(r));
  for (int r : optional) tracker.observe_scale(lp.dense_row(r));

  std::vector<int> selected;
  selected.reserve(nv);
  for (int r : required) {
    if (!tracker.add(lp.dense_row(r)))
      throw DegenerateSelectionFailure(
          "extract_basis: rows with positive multipliers are dependent");
    selected.push_back(r);
  }
  for (int r : optional) {
    if (tracker.rank() == nv) break;
    if (tracker.add(lp.dense_row(r))) selected.push_back(r);
  }
  if (tracker.rank() != nv)
    throw DegenerateSelectionFailure(
        "extract_basis: active rows do not span; loosen tol or check optimality");

  std::sort(selected.begin(), selected.end());
  Basis basis;
  basis.rows = std::move(selected);
  return basis;
}

PrimalDualSolution brute_force_solve(const CompactLp& lp) {
  Enumerator en(lp);

  double best_obj = std::numeric_limits<double>::infinity();
  bool found = false;
  en.for_each_feasible([&](const std::vector<int>&, const Vector& z) {
    found = true;
    best_obj = std::min(best_obj, lp.p.dot(z));
  });

  PrimalDualSolution out;
  out.iterations = 0;
  if (!found) {
    out.status = SolveStatus::Infeasible;
    return out;
  }

  const double obj_tol = 1e-9 * (1.0 + std::abs(best_obj));
  const double dual_tol = 1e-9 * (1.0 + lp.p.cwiseAbs().maxCoeff());
  bool have_kkt = false;
  en.for_each_feasible([&](const std::vector<int>& comb, const Vector& z) {
    if (have_kkt || lp.p.dot(z) > best_obj + obj_tol) return;
    // Dual candidate on this basis: G[B,:]' lambda_B = p, lambda_B >= 0.
    Matrix At(en.nv, en.nv);
    for (int k = 0; k < en.nv; ++k) At.col(k) = en.rows_dense[comb[k]];
    Vector lamB = lp.p;
    if (!dense_solve(At, lamB)) return;
    if (lamB.minCoeff() < -dual_tol) return;
    have_kkt = true;
    out.z = z;
    out.objective = lp.p.dot(z);
    out.lambda.setZero(en.mr);
    for (int k = 0; k < en.nv; ++k) out.lambda[comb[k]] = std::max(lamB[k], 0.0);
    out.basis.rows = comb;
    out.status = SolveStatus::Optimal;
  });

  if (!have_kkt) {
    // Numerically ambiguous duals; fall back to the first optimal basis.
    en.for_each_feasible([&](const std::vector<int>& comb, const Vector& z) {
      if (out.status == SolveStatus::Optimal || lp.p.dot(z) > best_obj + obj_tol) return;
      out.z = z;
      out.objective = lp.p.dot(z);
      out.lambda.setZero(en.mr);
      out.basis.rows = comb;
      out.status = SolveStatus::Optimal;
    });
  }
  return out;
}

std::vector<Basis> enumerate_optimal_bases(const CompactLp& lp, double tol) {
  Enumerator en(lp);
  double best_obj = std::numeric_limits<double>::infinity();
  bool found = false;
  en.for_each_feasible([&](const std::vector<int>&, const Vector& z) {
    found = true;
    best_obj = std::min(best_obj, lp.p.dot(z));
  });
  std::vector<Basis> out;
  if (!found) return out;
  const double obj_tol = tol * (1.0 + std::abs(best_obj));
  en.for_each_feasible([&](const std::vector<int>& comb, const Vector& z) {
    if (lp.p.dot(z) <= best_obj + obj_tol) out.push_back(Basis{comb});
  });
  return out;
}

}  // namespace dhmpc
