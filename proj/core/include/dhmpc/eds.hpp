#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dhmpc/lp_solver.hpp"
#include "dhmpc/mpc_model.hpp"

namespace dhmpc {

/// Conditioning constants of a row basis:
///   gamma = sigma_max / sigma_min^2,
///   rho   = (sigma_max^2 - sigma_min^2) / (sigma_max^2 + sigma_min^2).
struct BasisConditioning {
  double sigma_min = 0;
  double sigma_max = 0;
  double gamma = 0;
  double rho = 0;
};

/// Singular values of the explicit G[B,:] (dense SVD).
BasisConditioning basis_conditioning(const CompactLp& lp, const Basis& basis);

/// Stage-wise decay bound for the basic-solution map: for every stage i,
///   ||z^B_i(d) - z^B_i(d')|| <= sum_j gamma * rho^{(|i-j|-1)+} ||d_j - d'_j||.
struct DecayBoundReport {
  Vector lhs;   // per-stage left side
  Vector rhs;   // per-stage right side
  bool holds = false;
};

DecayBoundReport theorem2_bound_check(const CompactLp& lp, const Basis& basis, const Vector& d,
                                      const Vector& d_prime, double tol = 1e-9);

/// Verifies that block (i,j) of (G[B,:] G[B,:]')^k vanishes whenever
/// |i-j| > k, for k = 1..k_max (dense powers; small instances).
bool banded_power_check(const CompactLp& lp, const Basis& basis, int k_max, double tol = 1e-12);

/// Min/max singular values over every basis that is optimal for at least
/// one of the data samples (exhaustive; within the enumeration cap).
std::pair<double, double> global_conditioning_bruteforce(const CompactLp& lp,
                                                         const std::vector<Vector>& data_samples);

/// One perturbed data channel: a component of v or w, perturbed on both
/// paired rows of d so equalities stay equalities.
struct PerturbationChannel {
  bool on_w = true;  // false: component of v
  int index = 0;     // 0-based component
  double sigma = 0;
};

struct PerturbationExperimentSpec {
  int window_lo = 0;  // 0-based stage window, inclusive
  int window_hi = 0;
  std::vector<PerturbationChannel> channels;
  int samples = 0;
  std::uint64_t seed = 0;
};

struct PerturbationSamples {
  Vector reference;         // z*(d)
  std::vector<Vector> z;    // z*(d + delta), one per accepted sample
  int discarded = 0;        // infeasible perturbed problems
};

/// Monte-Carlo resolve of P(d + delta) with Gaussian noise applied inside
/// the window. Samples are independent; `threads` workers each hold their
/// own solver, and sample i draws from a stream seeded by (seed, i).
PerturbationSamples perturbation_experiment(const CompactLp& lp, const Dims& dims,
                                            const PerturbationExperimentSpec& spec,
                                            int threads = 1);

/// Mean over samples of || z_stage(sample) - z_stage(reference) ||.
double mean_stage_deviation(const PerturbationSamples& samples, int stage, int n);

}  // namespace dhmpc
