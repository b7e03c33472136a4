#include "dhmpc/eds.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <thread>

#include <Eigen/Dense>

namespace dhmpc {

namespace {

Matrix dense_basis_matrix(const CompactLp& lp, const Basis& basis) {
  const int nv = lp.num_vars();
  if (static_cast<int>(basis.rows.size()) != nv)
    throw ModelError("basis must have n*N rows");
  Matrix GB(nv, nv);
  for (int k = 0; k < nv; ++k) GB.row(k) = lp.dense_row(basis.rows[k]);
  return GB;
}

}  // namespace

BasisConditioning basis_conditioning(const CompactLp& lp, const Basis& basis) {
  const Matrix GB = dense_basis_matrix(lp, basis);
  Vector sv;
  if (GB.rows() <= 800) {
    sv = Eigen::JacobiSVD<Matrix>(GB).singularValues();
  } else {
    sv = Eigen::BDCSVD<Matrix>(GB).singularValues();
  }
  BasisConditioning out;
  out.sigma_max = sv[0];
  out.sigma_min = sv[sv.size() - 1];
  if (out.sigma_min <= 1e-12 * out.sigma_max)
    throw ModelError("basis_conditioning: singular basis");
  out.gamma = out.sigma_max / (out.sigma_min * out.sigma_min);
  const double lo2 = out.sigma_min * out.sigma_min;
  const double hi2 = out.sigma_max * out.sigma_max;
  out.rho = (hi2 - lo2) / (hi2 + lo2);
  return out;
}

DecayBoundReport theorem2_bound_check(const CompactLp& lp, const Basis& basis, const Vector& d,
                                      const Vector& d_prime, double tol) {
  if (d.size() != lp.num_rows() || d_prime.size() != lp.num_rows())
    throw ModelError("theorem2_bound_check: data must have m*N entries");
  const BasisConditioning cond = basis_conditioning(lp, basis);
  const Vector za = basic_solution(lp, basis, d);
  const Vector zb = basic_solution(lp, basis, d_prime);

  Vector stage_pert(lp.N);
  for (int j = 0; j < lp.N; ++j)
    stage_pert[j] = (d.segment(static_cast<Eigen::Index>(j) * lp.m, lp.m) -
                     d_prime.segment(static_cast<Eigen::Index>(j) * lp.m, lp.m))
                        .norm();

  DecayBoundReport report;
  report.lhs.resize(lp.N);
  report.rhs.resize(lp.N);
  report.holds = true;
  for (int i = 0; i < lp.N; ++i) {
    report.lhs[i] = (za.segment(static_cast<Eigen::Index>(i) * lp.n, lp.n) -
                     zb.segment(static_cast<Eigen::Index>(i) * lp.n, lp.n))
                        .norm();
    double bound = 0;
    for (int j = 0; j < lp.N; ++j) {
      const int gap = std::max(std::abs(i - j) - 1, 0);
      bound += cond.gamma * std::pow(cond.rho, gap) * stage_pert[j];
    }
    report.rhs[i] = bound;
    if (report.lhs[i] > report.rhs[i] + tol) report.holds = false;
  }
  return report;
}

bool banded_power_check(const CompactLp& lp, const Basis& basis, int k_max, double tol) {
  const Matrix GB = dense_basis_matrix(lp, basis);
  const Matrix H = GB * GB.transpose();

  // Position blocks: row l of G[B,:] belongs to the stage of basis row l.
  std::vector<std::pair<int, int>> block(lp.N, {0, 0});  // [begin, end) positions
  {
    std::vector<int> stage_of(basis.rows.size());
    for (size_t l = 0; l < basis.rows.size(); ++l) stage_of[l] = basis.rows[l] / lp.m;
    for (int i = 0; i < lp.N; ++i) {
      const auto lo = std::lower_bound(stage_of.begin(), stage_of.end(), i);
      const auto hi = std::upper_bound(stage_of.begin(), stage_of.end(), i);
      block[i] = {static_cast<int>(lo - stage_of.begin()), static_cast<int>(hi - stage_of.begin())};
    }
  }

  Matrix P = H;
  for (int k = 1; k <= k_max; ++k) {
    for (int i = 0; i < lp.N; ++i) {
      for (int j = 0; j < lp.N; ++j) {
        if (std::abs(i - j) <= k) continue;
        const auto [ib, ie] = block[i];
        const auto [jb, je] = block[j];
        if (ib == ie || jb == je) continue;
        if (P.block(ib, jb, ie - ib, je - jb).cwiseAbs().maxCoeff() > tol) return false;
      }
    }
    if (k < k_max) P = P * H;
  }
  return true;
}

std::pair<double, double> global_conditioning_bruteforce(const CompactLp& lp,
                                                         const std::vector<Vector>& data_samples) {
  std::set<std::vector<int>> seen;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0;
  CompactLp work = lp;
  for (const Vector& d : data_samples) {
    if (d.size() != lp.num_rows())
      throw ModelError("global_conditioning_bruteforce: bad sample size");
    work.d = d;
    for (const Basis& b : enumerate_optimal_bases(work)) {
      if (!seen.insert(b.rows).second) continue;
      const BasisConditioning c = basis_conditioning(work, b);
      lo = std::min(lo, c.sigma_min);
      hi = std::max(hi, c.sigma_max);
    }
  }
  if (seen.empty()) throw ModelError("global_conditioning_bruteforce: no optimal basis found");
  return {lo, hi};
}

namespace {

void apply_channel_noise(Vector& d, const Dims& dims, int m, int stage,
                         const PerturbationChannel& ch, double delta) {
  const Eigen::Index base = static_cast<Eigen::Index>(stage) * m;
  if (ch.on_w) {
    d[base + 2 * dims.nx + ch.index] += delta;
    d[base + 2 * dims.nx + dims.nw + ch.index] -= delta;
  } else {
    d[base + ch.index] += delta;
    d[base + dims.nx + ch.index] -= delta;
  }
}

}  // namespace

PerturbationSamples perturbation_experiment(const CompactLp& lp, const Dims& dims,
                                            const PerturbationExperimentSpec& spec,
                                            int threads) {
  lp.validate();
  const auto [n, m] = stage_dims(dims.nx, dims.nu, dims.nw);
  if (n != lp.n || m != lp.m || dims.N != lp.N)
    throw ModelError("perturbation_experiment: dims do not match the problem");
  if (spec.window_lo < 0 || spec.window_hi >= lp.N || spec.window_lo > spec.window_hi)
    throw ModelError("perturbation_experiment: window out of range");
  for (const auto& ch : spec.channels) {
    if (ch.sigma < 0) throw ModelError("perturbation_experiment: sigma must be >= 0");
    if (ch.index < 0 || ch.index >= (ch.on_w ? dims.nw : dims.nx))
      throw ModelError("perturbation_experiment: channel index out of range");
  }

  PerturbationSamples out;
  {
    PrimalDualSolution ref = solve(lp);
    if (ref.status != SolveStatus::Optimal)
      throw ModelError("perturbation_experiment: reference problem is not solvable");
    out.reference = ref.z;
  }

  const int nthreads = std::max(1, std::min(threads, std::max(1, spec.samples)));
  std::vector<Vector> slot(spec.samples);
  std::vector<char> ok(spec.samples, 0);

  auto worker = [&](int w) {
    SimplexSolver solver;
    CompactLp mine = lp;
    // Every sample re-solves from the reference optimal basis, which stays
    // dual feasible under data-only changes; results are then independent
    // of how samples are distributed over workers.
    SimplexSolver::WarmState reference_basis;
    bool warmed = false;
    {
      CompactLp base = lp;
      if (solver.solve(base).status == SolveStatus::Optimal) {
        reference_basis = solver.snapshot();
        warmed = true;
      }
    }
    for (int s = w; s < spec.samples; s += nthreads) {
      std::seed_seq seq{static_cast<unsigned>(spec.seed & 0xffffffffu),
                        static_cast<unsigned>(spec.seed >> 32), static_cast<unsigned>(s)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> gauss(0.0, 1.0);

      mine.d = lp.d;
      for (int t = spec.window_lo; t <= spec.window_hi; ++t)
        for (const auto& ch : spec.channels)
          apply_channel_noise(mine.d, dims, m, t, ch, ch.sigma * gauss(rng));

      PrimalDualSolution sol;
      if (warmed) {
        solver.restore(reference_basis);
        sol = solver.resolve_new_data(mine);
      } else {
        sol = solver.solve(mine);
      }
      if (sol.status == SolveStatus::NumericalFailure) {
        solver.clear_warm_state();
        sol = solver.solve(mine);
      }
      if (sol.status == SolveStatus::Optimal) {
        slot[s] = std::move(sol.z);
        ok[s] = 1;
      }
    }
  };

  if (nthreads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int w = 0; w < nthreads; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }

  for (int s = 0; s < spec.samples; ++s) {
    if (ok[s]) out.z.push_back(std::move(slot[s]));
    else ++out.discarded;
  }
  return out;
}

double mean_stage_deviation(const PerturbationSamples& samples, int stage, int n) {
  if (samples.z.empty()) return 0.0;
  double acc = 0;
  for (const Vector& z : samples.z)
    acc += (z.segment(static_cast<Eigen::Index>(stage) * n, n) -
            samples.reference.segment(static_cast<Eigen::Index>(stage) * n, n))
               .norm();
  return acc / static_cast<double>(samples.z.size());
}

}  // namespace dhmpc
