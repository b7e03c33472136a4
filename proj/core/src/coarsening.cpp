#include "dhmpc/coarsening.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gmp.h>

namespace dhmpc {

namespace {

/// floor(base^{num/den}) for integers base >= 1, num >= 0, den >= 1,
/// exact: the largest t with t^den <= base^num.
int exact_floor_pow(int base, int num, int den) {
  if (num == 0) return 1;
  long double guess = std::floor(std::pow(static_cast<long double>(base),
                                          static_cast<long double>(num) / den));
  int t = std::max(1, static_cast<int>(guess) - 2);

  mpz_t lhs, rhs;
  mpz_init(lhs);
  mpz_init(rhs);
  mpz_ui_pow_ui(rhs, base, num);
  auto pow_le = [&](int cand) {
    mpz_ui_pow_ui(lhs, cand, den);
    return mpz_cmp(lhs, rhs) <= 0;
  };
  while (pow_le(t + 1)) ++t;
  while (t > 1 && !pow_le(t)) --t;
  mpz_clear(lhs);
  mpz_clear(rhs);
  return t;
}

CoarseGrid from_points(std::vector<int> pts, int N) {
  CoarseGrid g;
  g.points = std::move(pts);
  g.N = N;
  g.validate();
  return g;
}

void check_grid_args(int N, int K) {
  if (N < 1) throw ModelError("grid: N must be >= 1");
  if (K < 1 || K > N) throw ModelError("grid: K must satisfy 1 <= K <= N");
}

}  // namespace

const char* to_string(GridScheme s) {
  switch (s) {
    case GridScheme::Equal: return "equal";
    case GridScheme::FullThenSparse: return "fts";
    case GridScheme::Diffusing: return "diffusing";
  }
  return "unknown";
}

GridScheme parse_grid_scheme(const std::string& name) {
  if (name == "equal") return GridScheme::Equal;
  if (name == "fts" || name == "full_then_sparse") return GridScheme::FullThenSparse;
  if (name == "diffusing") return GridScheme::Diffusing;
  throw ModelError("unknown grid scheme: " + name);
}

void CoarseGrid::validate() const {
  if (N < 1) throw ModelError("grid: N must be >= 1");
  if (points.empty()) throw ModelError("grid: needs at least one point");
  if (points.front() != 1) throw ModelError("grid: M_1 must be 1");
  for (size_t i = 1; i < points.size(); ++i)
    if (points[i] <= points[i - 1])
      throw ModelError("grid: points must be strictly increasing (duplicate point)");
  if (points.back() > N) throw ModelError("grid: points must lie in 1..N");
}

int CoarseGrid::block_of(int t) const {
  const auto it = std::upper_bound(points.begin(), points.end(), t + 1);
  return static_cast<int>(it - points.begin()) - 1;
}

CoarseGrid grid_equal_spacing(int N, int K) {
  check_grid_args(N, K);
  std::vector<int> pts(K);
  for (int k = 1; k <= K; ++k)
    pts[k - 1] = static_cast<int>((static_cast<long long>(N) * (k - 1)) / K) + 1;
  return from_points(std::move(pts), N);
}

CoarseGrid grid_full_then_sparse(int N, int K) {
  check_grid_args(N, K);
  std::vector<int> pts(K);
  std::iota(pts.begin(), pts.end(), 1);
  return from_points(std::move(pts), N);
}

CoarseGrid grid_diffusing(int N, int K) {
  check_grid_args(N, K);
  std::vector<int> pts(K);
  for (int k = 1; k <= K; ++k)
    pts[k - 1] = std::max(k, exact_floor_pow(N + 1, k - 1, K));
  return from_points(std::move(pts), N);
}

CoarseGrid make_grid(GridScheme scheme, int N, int K) {
  switch (scheme) {
    case GridScheme::Equal: return grid_equal_spacing(N, K);
    case GridScheme::FullThenSparse: return grid_full_then_sparse(N, K);
    case GridScheme::Diffusing: return grid_diffusing(N, K);
  }
  throw ModelError("unknown grid scheme");
}

CoarseGrid grid_feasibility_guard(GridScheme scheme, int N, int K) {
  if (K < 2) throw ModelError("guarded grid: K must be >= 2");
  check_grid_args(N, K);
  const CoarseGrid tail = make_grid(scheme, N - 1, K - 1);
  std::vector<int> pts;
  pts.reserve(K);
  pts.push_back(1);
  for (int mk : tail.points) pts.push_back(mk + 1);
  return from_points(std::move(pts), N);
}

double CoarseningOperators::scale(int k) const {
  return 1.0 / std::sqrt(static_cast<double>(grid.block_len(k)));
}

Vector CoarseningOperators::apply_T(const Vector& coarse) const {
  Vector full = Vector::Zero(static_cast<Eigen::Index>(n) * grid.N);
  for (int k = 0; k < grid.K(); ++k) {
    const double s = scale(k);
    for (int i = grid.begin0(k); i < grid.end0(k); ++i)
      full.segment(static_cast<Eigen::Index>(i) * n, n) = s * coarse.segment(static_cast<Eigen::Index>(k) * n, n);
  }
  return full;
}

Vector CoarseningOperators::apply_Tt(const Vector& full) const {
  Vector coarse = Vector::Zero(static_cast<Eigen::Index>(n) * grid.K());
  for (int k = 0; k < grid.K(); ++k) {
    const double s = scale(k);
    for (int i = grid.begin0(k); i < grid.end0(k); ++i)
      coarse.segment(static_cast<Eigen::Index>(k) * n, n) += s * full.segment(static_cast<Eigen::Index>(i) * n, n);
  }
  return coarse;
}

Vector CoarseningOperators::apply_U(const Vector& coarse) const {
  Vector full = Vector::Zero(static_cast<Eigen::Index>(m) * grid.N);
  for (int k = 0; k < grid.K(); ++k) {
    const double s = scale(k);
    for (int i = grid.begin0(k); i < grid.end0(k); ++i)
      full.segment(static_cast<Eigen::Index>(i) * m, m) = s * coarse.segment(static_cast<Eigen::Index>(k) * m, m);
  }
  return full;
}

Vector CoarseningOperators::apply_Ut(const Vector& full) const {
  Vector coarse = Vector::Zero(static_cast<Eigen::Index>(m) * grid.K());
  for (int k = 0; k < grid.K(); ++k) {
    const double s = scale(k);
    for (int i = grid.begin0(k); i < grid.end0(k); ++i)
      coarse.segment(static_cast<Eigen::Index>(k) * m, m) += s * full.segment(static_cast<Eigen::Index>(i) * m, m);
  }
  return coarse;
}

Matrix CoarseningOperators::dense_T() const {
  Matrix T = Matrix::Zero(static_cast<Eigen::Index>(n) * grid.N, static_cast<Eigen::Index>(n) * grid.K());
  for (int k = 0; k < grid.K(); ++k)
    for (int i = grid.begin0(k); i < grid.end0(k); ++i)
      T.block(static_cast<Eigen::Index>(i) * n, static_cast<Eigen::Index>(k) * n, n, n) =
          scale(k) * Matrix::Identity(n, n);
  return T;
}

Matrix CoarseningOperators::dense_U() const {
  Matrix U = Matrix::Zero(static_cast<Eigen::Index>(m) * grid.N, static_cast<Eigen::Index>(m) * grid.K());
  for (int k = 0; k < grid.K(); ++k)
    for (int i = grid.begin0(k); i < grid.end0(k); ++i)
      U.block(static_cast<Eigen::Index>(i) * m, static_cast<Eigen::Index>(k) * m, m, m) =
          scale(k) * Matrix::Identity(m, m);
  return U;
}

Prior Prior::zero(const CompactLp& lp) {
  Prior prior;
  prior.z_o = Vector::Zero(lp.num_vars());
  prior.lambda_o = Vector::Zero(lp.num_rows());
  return prior;
}

CoarseLp coarsen(const CompactLp& lp, const CoarseGrid& grid, const Prior& prior) {
  lp.validate();
  grid.validate();
  if (grid.N != lp.N) throw ModelError("coarsen: grid horizon does not match the problem");
  if (prior.z_o.size() != lp.num_vars() || prior.lambda_o.size() != lp.num_rows())
    throw ModelError("coarsen: prior dimensions do not match the problem");

  const int n = lp.n, m = lp.m, K = grid.K();
  CoarseningOperators ops{grid, n, m};

  CoarseLp out;
  out.grid = grid;
  out.prior = prior;
  CompactLp& c = out.lp;
  c.N = K;
  c.n = n;
  c.m = m;
  c.p.setZero(static_cast<Eigen::Index>(n) * K);
  c.d.setZero(static_cast<Eigen::Index>(m) * K);
  c.G_diag.assign(K, Matrix());
  c.G_sub.assign(K, Matrix());

  for (int k = 0; k < K; ++k) {
    const double s = ops.scale(k);
    Matrix Gd = Matrix::Zero(m, n);
    Vector pk = Vector::Zero(n);
    Vector dk = Vector::Zero(m);
    for (int i = grid.begin0(k); i < grid.end0(k); ++i) {
      Gd += lp.G_diag[i];
      if (i > grid.begin0(k)) Gd += lp.G_sub[i];

      pk += lp.p.segment(static_cast<Eigen::Index>(i) * n, n);
      pk -= lp.G_diag[i].transpose() * prior.lambda_o.segment(static_cast<Eigen::Index>(i) * m, m);
      if (i + 1 < lp.N)
        pk -= lp.G_sub[i + 1].transpose() *
              prior.lambda_o.segment(static_cast<Eigen::Index>(i + 1) * m, m);

      dk += lp.d.segment(static_cast<Eigen::Index>(i) * m, m);
      dk -= lp.G_diag[i] * prior.z_o.segment(static_cast<Eigen::Index>(i) * n, n);
      if (i > 0)
        dk -= lp.G_sub[i] * prior.z_o.segment(static_cast<Eigen::Index>(i - 1) * n, n);
    }
    c.G_diag[k] = (s * s) * Gd;
    c.p.segment(static_cast<Eigen::Index>(k) * n, n) = s * pk;
    c.d.segment(static_cast<Eigen::Index>(k) * m, m) = s * dk;
    if (k > 0) {
      const int first = grid.begin0(k);
      c.G_sub[k] = (s * ops.scale(k - 1)) * lp.G_sub[first];
    }
  }
  c.validate();
  return out;
}

std::pair<Vector, Vector> project(const PrimalDualSolution& coarse_sol, const Prior& prior,
                                  const CoarseningOperators& ops) {
  const int K = ops.grid.K();
  if (coarse_sol.z.size() != static_cast<Eigen::Index>(ops.n) * K ||
      coarse_sol.lambda.size() != static_cast<Eigen::Index>(ops.m) * K)
    throw ModelError("project: coarse solution does not match the grid");
  if (prior.z_o.size() != static_cast<Eigen::Index>(ops.n) * ops.grid.N)
    throw ModelError("project: prior does not match the grid");
  Vector z_prime = prior.z_o + ops.apply_T(coarse_sol.z);
  Vector lambda_prime = prior.lambda_o + ops.apply_U(coarse_sol.lambda);
  return {std::move(z_prime), std::move(lambda_prime)};
}

FreeVariables free_variables(const CoarseGrid& grid, const Prior& prior, double tol) {
  if (tol < 0) throw ModelError("free_variables: tol must be >= 0");
  const int m = static_cast<int>(prior.lambda_o.size()) / grid.N;
  FreeVariables fv;
  for (int k = 0; k < grid.K(); ++k) {
    if (grid.block_len(k) != 1) continue;
    const int stage = grid.begin0(k);
    const double mag =
        prior.lambda_o.segment(static_cast<Eigen::Index>(stage) * m, m).cwiseAbs().maxCoeff();
    if (mag <= tol) {
      fv.coarse.push_back(k);
      fv.full.push_back(stage);
    }
  }
  return fv;
}

Vector induced_perturbation(const CompactLp& lp, const Vector& z_prime,
                            const std::vector<int>& S_full) {
  if (z_prime.size() != lp.num_vars()) throw ModelError("induced_perturbation: bad z'");
  std::vector<char> in_S(lp.N, 0);
  for (int s : S_full) in_S.at(s) = 1;

  Vector d_prime = lp.d;
  for (int i = 0; i < lp.N; ++i) {
    if (in_S[i]) continue;
    Vector gi = lp.G_diag[i] * z_prime.segment(static_cast<Eigen::Index>(i) * lp.n, lp.n);
    if (i > 0)
      gi += lp.G_sub[i] * z_prime.segment(static_cast<Eigen::Index>(i - 1) * lp.n, lp.n);
    d_prime.segment(static_cast<Eigen::Index>(i) * lp.m, lp.m) = gi;
  }
  return d_prime;
}

namespace {

double stage_residual_max(const CompactLp& lp, const Vector& z_prime,
                          const std::vector<char>& in_S) {
  double best = 0.0;
  for (int i = 0; i < lp.N; ++i) {
    if (in_S[i]) continue;
    Vector res = lp.d.segment(static_cast<Eigen::Index>(i) * lp.m, lp.m) -
                 lp.G_diag[i] * z_prime.segment(static_cast<Eigen::Index>(i) * lp.n, lp.n);
    if (i > 0)
      res -= lp.G_sub[i] * z_prime.segment(static_cast<Eigen::Index>(i - 1) * lp.n, lp.n);
    best = std::max(best, res.norm());
  }
  return best;
}

}  // namespace

double delta_estimate(const CompactLp& lp, const CoarseGrid& grid, const Prior& prior,
                      const Vector& z_prime) {
  const FreeVariables fv = free_variables(grid, prior, 1e-9);
  std::vector<char> in_S(lp.N, 0);
  for (int s : fv.full) in_S[s] = 1;
  return stage_residual_max(lp, z_prime, in_S);
}

double delta_exact_bruteforce(const CompactLp& lp, const CoarseLp& coarse) {
  if (coarse.lp.num_vars() > 12)
    throw TooLarge("delta_exact_bruteforce: coarse primal dimension capped at 12");
  const FreeVariables fv = free_variables(coarse.grid, coarse.prior, 1e-9);
  std::vector<char> in_S(lp.N, 0);
  for (int s : fv.full) in_S[s] = 1;

  const CoarseningOperators ops = coarse.operators();
  // Vertex set = feasible basic solutions of the coarse LP.
  const std::vector<Basis> vertices =
      enumerate_optimal_bases(coarse.lp, std::numeric_limits<double>::infinity());

  double best = 0.0;
  for (const Basis& b : vertices) {
    PrimalDualSolution vertex;
    vertex.z = basic_solution(coarse.lp, b, coarse.lp.d);
    vertex.lambda = Vector::Zero(coarse.lp.num_rows());
    const auto [z_prime, lambda_prime] = project(vertex, coarse.prior, ops);
    (void)lambda_prime;
    best = std::max(best, stage_residual_max(lp, z_prime, in_S));
  }
  return best;
}

}  // namespace dhmpc
