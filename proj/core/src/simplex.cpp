#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "dhmpc/banded_lu.hpp"
#include "dhmpc/lp_solver.hpp"

namespace dhmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum VStat : std::uint8_t { kBasic = 0, kAtLower = 1, kAtUpper = 2, kFreeZero = 3 };

struct Eta {
  int pos = -1;
  double pivot = 0.0;
  std::vector<std::pair<int, double>> entries;  // (position, g), excludes pos
};

enum class LoopResult { Optimal, Infeasible, Unbounded, NumericalFailure, IterationLimit };

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

struct SimplexSolver::Impl {
  SolverOptions opts;

  const CompactLp* lp = nullptr;
  ComputationalForm cf;
  bool have_state = false;  // vstat/basic describe a basis for cf's structure

  int nv = 0, nr = 0, nt = 0;
  Vector lb, ub;    // nt
  Vector cost;      // nt, phase-2 objective
  Vector x;         // nt
  std::vector<std::uint8_t> vstat;  // nt
  std::vector<int> basic;           // nr
  std::vector<int> pos_of;          // nt, -1 when nonbasic

  std::vector<int> col_rmin, col_rmax;  // row span of structural columns
  Vector price_wgt;                     // nt, 1 + ||a_j||^2

  BandedLu lu;
  std::vector<Eta> etas;

  Vector work_y, work_c1, work_rhs, work_g, work_rho;
  std::vector<double> cand_theta;
  std::vector<int> cand_pos;

  double tol_feas = 0, tol_dual = 0, tol_pivot = 0;
  long iterations = 0;
  long iter_limit = 0;
  bool bland = false;
  int stall_count = 0;
  double last_progress_obj = kInf;

  // ---- binding -----------------------------------------------------------

  void bind(const CompactLp& problem) {
    lp = &problem;
    ComputationalForm fresh = ComputationalForm::build(problem);
    const bool compatible = have_state && fresh.same_structure(cf) &&
                            static_cast<int>(basic.size()) == fresh.num_rows &&
                            static_cast<int>(vstat.size()) == fresh.num_vars + fresh.num_rows;
    cf = std::move(fresh);
    have_state = have_state && compatible;

    nv = cf.num_vars;
    nr = cf.num_rows;
    nt = nv + nr;

    lb.resize(nt);
    ub.resize(nt);
    lb.head(nv) = cf.var_lo;
    ub.head(nv) = cf.var_hi;
    lb.tail(nr) = cf.row_lo;
    ub.tail(nr) = cf.row_hi;

    cost.setZero(nt);
    cost.head(nv) = lp->p;

    tol_feas = opts.feas_tol * (1.0 + lp->d.cwiseAbs().maxCoeff());
    tol_dual = opts.opt_tol * (1.0 + lp->p.cwiseAbs().maxCoeff());
    tol_pivot = opts.pivot_tol;
    iter_limit = opts.max_iterations > 0
                     ? opts.max_iterations
                     : 200L * (nr + nt) + 10000L;

    col_rmin.assign(nv, 0);
    col_rmax.assign(nv, -1);
    price_wgt.setOnes(nt);
    for (int j = 0; j < nv; ++j) {
      int rmin = nr, rmax = -1;
      double nrm2 = 0;
      for (Eigen::SparseMatrix<double>::InnerIterator it(cf.C, j); it; ++it) {
        rmin = std::min(rmin, static_cast<int>(it.row()));
        rmax = std::max(rmax, static_cast<int>(it.row()));
        nrm2 += it.value() * it.value();
      }
      col_rmin[j] = rmin;
      col_rmax[j] = rmax;
      price_wgt[j] = 1.0 + nrm2;
    }
    price_wgt.tail(nr).setConstant(2.0);

    x.setZero(nt);
    work_y.resize(nr);
    work_c1.resize(nt);
    work_rhs.resize(nr);
    work_g.resize(nr);
    work_rho.resize(nr);
    iterations = 0;
    bland = false;
    stall_count = 0;
  }

  // ---- basis bookkeeping --------------------------------------------------

  std::uint8_t default_nonbasic_stat(int v) const {
    const bool lo = std::isfinite(lb[v]);
    const bool hi = std::isfinite(ub[v]);
    if (lo && hi) return std::abs(lb[v]) <= std::abs(ub[v]) ? kAtLower : kAtUpper;
    if (lo) return kAtLower;
    if (hi) return kAtUpper;
    return kFreeZero;
  }

  void init_slack_basis() {
    vstat.assign(nt, kAtLower);
    for (int j = 0; j < nv; ++j) vstat[j] = default_nonbasic_stat(j);
    basic.resize(nr);
    for (int k = 0; k < nr; ++k) {
      basic[k] = nv + k;
      vstat[nv + k] = kBasic;
    }
    have_state = true;
  }

  void snap_nonbasic() {
    for (int v = 0; v < nt; ++v) {
      switch (vstat[v]) {
        case kAtLower:
          if (!std::isfinite(lb[v])) vstat[v] = default_nonbasic_stat(v);
          break;
        case kAtUpper:
          if (!std::isfinite(ub[v])) vstat[v] = default_nonbasic_stat(v);
          break;
        default:
          break;
      }
      if (vstat[v] == kAtLower) x[v] = lb[v];
      else if (vstat[v] == kAtUpper) x[v] = ub[v];
      else if (vstat[v] == kFreeZero) x[v] = 0.0;
    }
  }

  void rebuild_pos_of() {
    pos_of.assign(nt, -1);
    for (int k = 0; k < nr; ++k) pos_of[basic[k]] = k;
  }

  int home_key(int v) const {
    if (v >= nv) return v - nv;
    const int stage = (v - v % lp->n) / lp->n;
    return cf.stage_row_start[stage];
  }

  /// Sorts basic columns into banded order and factors. False when singular.
  bool refactor() {
    std::sort(basic.begin(), basic.end(), [&](int a, int b) {
      const int ka = home_key(a), kb = home_key(b);
      return ka != kb ? ka < kb : a < b;
    });
    rebuild_pos_of();

    int kl = 0, ku = 0;
    for (int c = 0; c < nr; ++c) {
      const int v = basic[c];
      int rmin, rmax;
      if (v >= nv) {
        rmin = rmax = v - nv;
      } else {
        if (col_rmax[v] < col_rmin[v]) return false;  // empty column
        rmin = col_rmin[v];
        rmax = col_rmax[v];
      }
      kl = std::max(kl, rmax - c);
      ku = std::max(ku, c - rmin);
    }

    lu.reset(nr, kl, ku);
    for (int c = 0; c < nr; ++c) {
      const int v = basic[c];
      if (v >= nv) {
        lu.at(v - nv, c) = -1.0;
      } else {
        for (Eigen::SparseMatrix<double>::InnerIterator it(cf.C, v); it; ++it)
          lu.at(static_cast<int>(it.row()), c) = it.value();
      }
    }
    etas.clear();
    if (nr == 0) return true;
    return lu.factor();
  }

  /// Refactors, falling back to the all-logical basis when singular.
  void ensure_factor() {
    if (refactor()) return;
    init_slack_basis();
    snap_nonbasic();
    const bool ok = refactor();
    (void)ok;  // the slack basis is -I, always factorable
  }

  void ftran(Vector& w) const {
    if (nr == 0) return;
    lu.solve_in_place(w);
    for (const Eta& e : etas) {
      const double t = w[e.pos] / e.pivot;
      if (t != 0.0) {
        for (const auto& [i, g] : e.entries) w[i] -= g * t;
      }
      w[e.pos] = t;
    }
  }

  void btran(Vector& w) const {
    if (nr == 0) return;
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      double s = w[it->pos];
      for (const auto& [i, g] : it->entries) s -= g * w[i];
      w[it->pos] = s / it->pivot;
    }
    lu.solve_transpose_in_place(w);
  }

  /// Dense column of A for variable v into w (w must be zeroed by caller).
  void scatter_column(int v, Vector& w) const {
    if (v >= nv) {
      w[v - nv] = -1.0;
    } else {
      for (Eigen::SparseMatrix<double>::InnerIterator it(cf.C, v); it; ++it)
        w[static_cast<int>(it.row())] = it.value();
    }
  }

  double column_dot(int v, const Vector& w) const {
    if (v >= nv) return -w[v - nv];
    double s = 0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(cf.C, v); it; ++it)
      s += it.value() * w[static_cast<int>(it.row())];
    return s;
  }

  void compute_x_basic() {
    work_rhs.setZero(nr);
    for (int v = 0; v < nt; ++v) {
      if (vstat[v] == kBasic || x[v] == 0.0) continue;
      if (v >= nv) {
        work_rhs[v - nv] += x[v];  // -(-e_k) * x
      } else {
        for (Eigen::SparseMatrix<double>::InnerIterator it(cf.C, v); it; ++it)
          work_rhs[static_cast<int>(it.row())] -= it.value() * x[v];
      }
    }
    ftran(work_rhs);
    for (int k = 0; k < nr; ++k) x[basic[k]] = work_rhs[k];
  }

  double infeasibility_sum() const {
    double s = 0;
    for (int k = 0; k < nr; ++k) {
      const int v = basic[k];
      if (x[v] < lb[v]) s += lb[v] - x[v];
      else if (x[v] > ub[v]) s += x[v] - ub[v];
    }
    return s;
  }

  // ---- primal simplex ------------------------------------------------------

  /// Phase-1 gradient: -1 below the lower bound, +1 above the upper.
  void phase1_cost(Vector& c1) const {
    c1.setZero(nt);
    for (int k = 0; k < nr; ++k) {
      const int v = basic[k];
      if (x[v] < lb[v] - tol_feas) c1[v] = -1.0;
      else if (x[v] > ub[v] + tol_feas) c1[v] = 1.0;
    }
  }

  void dual_prices(const Vector& c, Vector& y) const {
    y.resize(nr);
    for (int k = 0; k < nr; ++k) y[k] = c[basic[k]];
    btran(y);
  }

  /// Best improving nonbasic under the given costs, or -1.
  int choose_entering(const Vector& c, const Vector& y, double* dq_out) const {
    int best = -1;
    double best_score = 0, best_d = 0;
    for (int v = 0; v < nt; ++v) {
      const std::uint8_t s = vstat[v];
      if (s == kBasic) continue;
      if (s != kFreeZero && lb[v] == ub[v]) continue;  // fixed
      const double d = c[v] - column_dot(v, y);
      bool eligible = false;
      if (s == kAtLower) eligible = d < -tol_dual;
      else if (s == kAtUpper) eligible = d > tol_dual;
      else eligible = std::abs(d) > tol_dual;
      if (!eligible) continue;
      if (bland) {
        if (best < 0) { best = v; best_d = d; }
        continue;
      }
      const double score = d * d / price_wgt[v];
      if (score > best_score) {
        best_score = score;
        best = v;
        best_d = d;
      }
    }
    if (best >= 0) *dq_out = best_d;
    return best;
  }

  struct RatioResult {
    double theta = kInf;
    int leave_pos = -1;   // -1 with finite theta: bound flip
    bool unbounded = false;
  };

  /// Movement of basics per unit step of the entering variable is -t*g.
  /// In phase 1, basics outside their box block at the violated bound.
  RatioResult ratio_test(int q, double t, const Vector& g, bool phase1) {
    RatioResult res;
    double theta_min = kInf;
    cand_theta.clear();
    cand_pos.clear();

    for (int k = 0; k < nr; ++k) {
      const double gk = g[k];
      if (std::abs(gk) <= tol_pivot) continue;
      const int v = basic[k];
      const double dir = -t * gk;
      double dist;
      if (phase1 && x[v] < lb[v] - tol_feas) {
        if (dir <= 0) continue;               // moving further below: no block
        dist = lb[v] - x[v];
      } else if (phase1 && x[v] > ub[v] + tol_feas) {
        if (dir >= 0) continue;
        dist = x[v] - ub[v];
      } else if (dir > 0) {
        if (!std::isfinite(ub[v])) continue;
        dist = ub[v] - x[v];
      } else {
        if (!std::isfinite(lb[v])) continue;
        dist = x[v] - lb[v];
      }
      const double theta = std::max(dist, 0.0) / std::abs(dir);
      cand_pos.push_back(k);
      cand_theta.push_back(theta);
      theta_min = std::min(theta_min, theta);
    }

    double theta_flip = kInf;
    if (vstat[q] == kAtLower && std::isfinite(ub[q])) theta_flip = ub[q] - lb[q];
    else if (vstat[q] == kAtUpper && std::isfinite(lb[q])) theta_flip = ub[q] - lb[q];

    if (theta_min == kInf && theta_flip == kInf) {
      res.unbounded = true;
      return res;
    }
    if (theta_flip < theta_min) {
      res.theta = theta_flip;
      res.leave_pos = -1;
      return res;
    }

    // Among near-minimal ratios prefer the largest pivot (or the lowest
    // variable index under Bland's rule).
    const double window = theta_min + 1e-9 * (1.0 + theta_min);
    int best = -1;
    double best_pivot = 0;
    for (size_t i = 0; i < cand_pos.size(); ++i) {
      if (cand_theta[i] > window) continue;
      const int k = cand_pos[i];
      if (bland) {
        if (best < 0 || basic[k] < basic[best]) best = k;
      } else if (std::abs(g[k]) > best_pivot) {
        best_pivot = std::abs(g[k]);
        best = k;
      }
    }
    res.theta = theta_min;
    res.leave_pos = best;
    return res;
  }

  void apply_flip(int q, double t, double theta, const Vector& g) {
    x[q] += t * theta;
    for (int k = 0; k < nr; ++k)
      if (g[k] != 0.0) x[basic[k]] -= t * theta * g[k];
    vstat[q] = vstat[q] == kAtLower ? kAtUpper : kAtLower;
    x[q] = vstat[q] == kAtLower ? lb[q] : ub[q];
  }

  bool apply_pivot(int q, double t, double theta, int leave_pos, const Vector& g) {
    const double pivot = g[leave_pos];
    if (std::abs(pivot) <= tol_pivot) return false;

    x[q] += t * theta;
    for (int k = 0; k < nr; ++k)
      if (g[k] != 0.0) x[basic[k]] -= t * theta * g[k];

    const int leaving = basic[leave_pos];
    // Snap the leaving variable exactly to the bound it reached.
    const double mid = std::isfinite(lb[leaving]) && std::isfinite(ub[leaving])
                           ? 0.5 * (lb[leaving] + ub[leaving])
                           : (std::isfinite(lb[leaving]) ? lb[leaving] : ub[leaving]);
    if (x[leaving] <= mid) {
      vstat[leaving] = kAtLower;
      x[leaving] = lb[leaving];
    } else {
      vstat[leaving] = kAtUpper;
      x[leaving] = ub[leaving];
    }
    if (!std::isfinite(x[leaving])) {  // free variable cannot leave
      vstat[leaving] = kFreeZero;
      x[leaving] = 0.0;
    }

    basic[leave_pos] = q;
    vstat[q] = kBasic;
    pos_of[q] = leave_pos;
    pos_of[leaving] = -1;

    Eta eta;
    eta.pos = leave_pos;
    eta.pivot = pivot;
    eta.entries.reserve(16);
    for (int k = 0; k < nr; ++k)
      if (k != leave_pos && std::abs(g[k]) > 1e-13) eta.entries.emplace_back(k, g[k]);
    etas.push_back(std::move(eta));

    if (static_cast<int>(etas.size()) >= opts.refactor_interval) {
      ensure_factor();
      compute_x_basic();
    }
    return true;
  }

  void track_progress(double obj) {
    if (obj < last_progress_obj - 1e-10 * (1.0 + std::abs(obj))) {
      last_progress_obj = obj;
      stall_count = 0;
      bland = false;
    } else if (++stall_count > opts.stall_limit) {
      bland = true;
    }
  }

  LoopResult primal_loop() {
    // Phase 1: drive the infeasibility of the basic variables to zero.
    last_progress_obj = kInf;
    stall_count = 0;
    bland = false;
    while (true) {
      const double infeas = infeasibility_sum();
      if (infeas <= tol_feas) break;
      if (++iterations > iter_limit) return LoopResult::IterationLimit;
      track_progress(infeas);

      phase1_cost(work_c1);
      dual_prices(work_c1, work_y);
      double dq = 0;
      const int q = choose_entering(work_c1, work_y, &dq);
      if (q < 0) return LoopResult::Infeasible;

      const double t = vstat[q] == kAtUpper ? -1.0 : (vstat[q] == kAtLower ? 1.0 : (dq < 0 ? 1.0 : -1.0));
      work_g.setZero(nr);
      scatter_column(q, work_g);
      ftran(work_g);
      const RatioResult rr = ratio_test(q, t, work_g, true);
      if (rr.unbounded) return LoopResult::NumericalFailure;  // cannot happen for a bounded gradient
      if (rr.leave_pos < 0) {
        apply_flip(q, t, rr.theta, work_g);
      } else if (!apply_pivot(q, t, rr.theta, rr.leave_pos, work_g)) {
        ensure_factor();
        compute_x_basic();
      }
    }

    // Phase 2.
    last_progress_obj = kInf;
    stall_count = 0;
    bland = false;
    while (true) {
      if (++iterations > iter_limit) return LoopResult::IterationLimit;

      dual_prices(cost, work_y);
      double dq = 0;
      const int q = choose_entering(cost, work_y, &dq);
      if (q < 0) return LoopResult::Optimal;

      double obj = 0;
      for (int v = 0; v < nv; ++v) obj += cost[v] * x[v];
      track_progress(obj);

      const double t = vstat[q] == kAtUpper ? -1.0 : (vstat[q] == kAtLower ? 1.0 : (dq < 0 ? 1.0 : -1.0));
      work_g.setZero(nr);
      scatter_column(q, work_g);
      ftran(work_g);
      const RatioResult rr = ratio_test(q, t, work_g, false);
      if (rr.unbounded) return LoopResult::Unbounded;
      if (rr.leave_pos < 0) {
        apply_flip(q, t, rr.theta, work_g);
      } else if (!apply_pivot(q, t, rr.theta, rr.leave_pos, work_g)) {
        ensure_factor();
        compute_x_basic();
      }

      // Phase-2 ratio steps can be blocked by residual infeasibility left
      // at tolerance level; restore exact basics periodically.
      if (iterations % (4 * opts.refactor_interval) == 0) {
        const double infeas = infeasibility_sum();
        if (infeas > tol_feas) return LoopResult::NumericalFailure;
      }
    }
  }

  // ---- dual simplex --------------------------------------------------------

  int most_violated_basic() const {
    int best = -1;
    double best_v = tol_feas;
    for (int k = 0; k < nr; ++k) {
      const int v = basic[k];
      const double viol = std::max(lb[v] - x[v], x[v] - ub[v]);
      if (viol > best_v) {
        best_v = viol;
        best = k;
      }
    }
    return best;
  }

  bool dual_feasible(const Vector& y, double slack) const {
    for (int v = 0; v < nt; ++v) {
      const std::uint8_t s = vstat[v];
      if (s == kBasic) continue;
      if (s != kFreeZero && lb[v] == ub[v]) continue;
      const double d = cost[v] - column_dot(v, y);
      if (s == kAtLower && d < -slack) return false;
      if (s == kAtUpper && d > slack) return false;
      if (s == kFreeZero && std::abs(d) > slack) return false;
    }
    return true;
  }

  LoopResult dual_loop() {
    last_progress_obj = kInf;
    stall_count = 0;
    bland = false;
    while (true) {
      if (++iterations > iter_limit) return LoopResult::IterationLimit;

      const int r = most_violated_basic();
      if (r < 0) return LoopResult::Optimal;

      const int vr = basic[r];
      const double s = x[vr] < lb[vr] ? 1.0 : -1.0;  // +1: leaves to lower
      track_progress(infeasibility_sum());

      work_rho.setZero(nr);
      work_rho[r] = 1.0;
      btran(work_rho);
      dual_prices(cost, work_y);

      // Dual ratio test: smallest |d_j / beta_j| over sign-eligible columns.
      int q = -1;
      double best_ratio = kInf, best_beta = 0;
      for (int v = 0; v < nt; ++v) {
        const std::uint8_t st = vstat[v];
        if (st == kBasic) continue;
        if (st != kFreeZero && lb[v] == ub[v]) continue;
        const double alpha = column_dot(v, work_rho);
        const double beta = s * alpha;
        bool eligible = false;
        if (st == kAtLower) eligible = beta < -tol_pivot;
        else if (st == kAtUpper) eligible = beta > tol_pivot;
        else eligible = std::abs(beta) > tol_pivot;
        if (!eligible) continue;
        const double d = cost[v] - column_dot(v, work_y);
        const double ratio = std::max(-d / beta, 0.0);
        const bool better =
            bland ? (ratio <= best_ratio + 1e-12 && (q < 0 || v < q))
                  : (ratio < best_ratio - 1e-12 ||
                     (ratio <= best_ratio + 1e-12 && std::abs(beta) > std::abs(best_beta)));
        if (better) {
          best_ratio = ratio;
          best_beta = beta;
          q = v;
        }
      }
      if (q < 0) return LoopResult::Infeasible;  // dual unbounded

      work_g.setZero(nr);
      scatter_column(q, work_g);
      ftran(work_g);
      const double alpha_q = work_g[r];
      if (std::abs(alpha_q) <= tol_pivot) {
        ensure_factor();
        compute_x_basic();
        continue;
      }

      const double target = s > 0 ? lb[vr] : ub[vr];
      const double delta = target - x[vr];
      const double step = delta / (-alpha_q);

      x[q] += step;
      for (int k = 0; k < nr; ++k)
        if (work_g[k] != 0.0) x[basic[k]] -= step * work_g[k];

      vstat[vr] = s > 0 ? kAtLower : kAtUpper;
      x[vr] = target;
      basic[r] = q;
      vstat[q] = kBasic;
      pos_of[q] = r;
      pos_of[vr] = -1;

      Eta eta;
      eta.pos = r;
      eta.pivot = alpha_q;
      for (int k = 0; k < nr; ++k)
        if (k != r && std::abs(work_g[k]) > 1e-13) eta.entries.emplace_back(k, work_g[k]);
      etas.push_back(std::move(eta));

      if (static_cast<int>(etas.size()) >= opts.refactor_interval) {
        ensure_factor();
        compute_x_basic();
      }
    }
  }

  // ---- solution assembly ---------------------------------------------------

  PrimalDualSolution finalize() {
    ensure_factor();
    compute_x_basic();

    PrimalDualSolution out;
    out.iterations = static_cast<int>(iterations);
    out.status = SolveStatus::Optimal;
    out.z = x.head(nv);
    out.objective = lp->p.dot(out.z);

    dual_prices(cost, work_y);
    out.lambda.setZero(lp->num_rows());
    std::vector<int> rows;
    rows.reserve(nv);
    bool shortfall = false;

    for (int k = 0; k < nr; ++k) {
      const int v = nv + k;
      const double yk = work_y[k];
      if (vstat[v] == kBasic) continue;
      const bool fixed_range = lb[v] == ub[v];
      const int src_lo = cf.row_src_lo[k];
      const int src_hi = cf.row_src_hi[k];
      if (fixed_range) {
        if (yk > 0 || src_hi < 0) {
          if (src_lo >= 0) out.lambda[src_lo] = std::max(yk, 0.0);
          if (src_hi >= 0) out.lambda[src_hi] = std::max(-yk, 0.0);
        } else {
          out.lambda[src_hi] = -yk;
        }
        if (yk > tol_dual || src_hi < 0) rows.push_back(src_lo);
        else if (yk < -tol_dual) rows.push_back(src_hi);
        else rows.push_back(std::min(src_lo, src_hi));
      } else if (vstat[v] == kAtLower) {
        out.lambda[src_lo] = std::max(yk, 0.0);
        rows.push_back(src_lo);
      } else if (vstat[v] == kAtUpper) {
        out.lambda[src_hi] = std::max(-yk, 0.0);
        rows.push_back(src_hi);
      } else {
        shortfall = true;  // free logical: one-sided row cannot be free
      }
    }

    for (int j = 0; j < nv; ++j) {
      if (vstat[j] == kBasic) continue;
      const double mu = cost[j] - column_dot(j, work_y);
      const bool fixed_var = lb[j] == ub[j];
      const int src_lo = cf.var_src_lo[j];
      const int src_hi = cf.var_src_hi[j];
      auto lambda_lo = [&] {
        if (src_lo >= 0) out.lambda[src_lo] = std::max(mu / cf.var_src_lo_coef[j], 0.0);
      };
      auto lambda_hi = [&] {
        if (src_hi >= 0) out.lambda[src_hi] = std::max(mu / cf.var_src_hi_coef[j], 0.0);
      };
      if (fixed_var) {
        if (mu > tol_dual) {
          lambda_lo();
          rows.push_back(src_lo >= 0 ? src_lo : src_hi);
        } else if (mu < -tol_dual) {
          lambda_hi();
          rows.push_back(src_hi >= 0 ? src_hi : src_lo);
        } else {
          rows.push_back(src_lo >= 0 && (src_hi < 0 || src_lo < src_hi) ? src_lo : src_hi);
        }
      } else if (vstat[j] == kAtLower) {
        if (src_lo < 0) { shortfall = true; continue; }
        lambda_lo();
        rows.push_back(src_lo);
      } else if (vstat[j] == kAtUpper) {
        if (src_hi < 0) { shortfall = true; continue; }
        lambda_hi();
        rows.push_back(src_hi);
      } else {
        shortfall = true;  // nonbasic free structural: no active row to report
      }
    }

    if (!shortfall && static_cast<int>(rows.size()) == nv) {
      std::sort(rows.begin(), rows.end());
      out.basis.rows = std::move(rows);
    } else {
      // Rare: complete a basis from the active rows directly.
      out.basis = extract_basis(*lp, out.z, out.lambda, tol_dual);
    }
    return out;
  }

  PrimalDualSolution make_status(SolveStatus st) {
    PrimalDualSolution out;
    out.status = st;
    out.iterations = static_cast<int>(iterations);
    if (nv > 0 && x.size() >= nv) {
      out.z = x.head(nv);
      out.objective = lp ? lp->p.dot(out.z) : 0.0;
    }
    return out;
  }

  PrimalDualSolution run_primal(const CompactLp& problem) {
    bind(problem);
    if (cf.bound_infeasible) {
      have_state = false;
      return make_status(SolveStatus::Infeasible);
    }
    if (!have_state || !opts.warm_start) init_slack_basis();
    snap_nonbasic();
    ensure_factor();
    compute_x_basic();

    LoopResult res = primal_loop();
    if (res == LoopResult::Optimal) {
      // Fresh factorization, then confirm; re-run once if tolerances drifted.
      ensure_factor();
      compute_x_basic();
      if (infeasibility_sum() > tol_feas) res = primal_loop();
    }
    switch (res) {
      case LoopResult::Optimal: return finalize();
      case LoopResult::Infeasible: have_state = true; return make_status(SolveStatus::Infeasible);
      case LoopResult::Unbounded: return make_status(SolveStatus::Unbounded);
      case LoopResult::IterationLimit:
      case LoopResult::NumericalFailure: have_state = false; return make_status(SolveStatus::NumericalFailure);
    }
    return make_status(SolveStatus::NumericalFailure);
  }

  PrimalDualSolution run_dual(const CompactLp& problem) {
    const bool had_state = have_state;
    bind(problem);
    if (cf.bound_infeasible) {
      have_state = false;
      return make_status(SolveStatus::Infeasible);
    }
    if (!had_state || !have_state) return run_primal(problem);

    snap_nonbasic();
    ensure_factor();
    compute_x_basic();

    dual_prices(cost, work_y);
    if (!dual_feasible(work_y, 10 * tol_dual)) return run_primal(problem);

    LoopResult res = dual_loop();
    if (res == LoopResult::Optimal) {
      ensure_factor();
      compute_x_basic();
      if (infeasibility_sum() > tol_feas) res = dual_loop();
    }
    if (res == LoopResult::Optimal) {
      dual_prices(cost, work_y);
      if (!dual_feasible(work_y, 10 * tol_dual)) {
        // Clean up tolerance-level dual violations with the primal loop.
        return run_primal(problem);
      }
      return finalize();
    }
    if (res == LoopResult::Infeasible) {
      have_state = false;
      return make_status(SolveStatus::Infeasible);
    }
    have_state = false;
    return run_primal(problem);
  }
};

SimplexSolver::SimplexSolver(SolverOptions opts) : opts_(opts), impl_(new Impl) {}
SimplexSolver::~SimplexSolver() = default;
SimplexSolver::SimplexSolver(SimplexSolver&&) noexcept = default;
SimplexSolver& SimplexSolver::operator=(SimplexSolver&&) noexcept = default;

PrimalDualSolution SimplexSolver::solve(const CompactLp& lp) {
  impl_->opts = opts_;
  return impl_->run_primal(lp);
}

PrimalDualSolution SimplexSolver::resolve_new_data(const CompactLp& lp) {
  impl_->opts = opts_;
  return impl_->run_dual(lp);
}

AdmissibleDataFlag SimplexSolver::find_feasible(const CompactLp& lp, double tol) {
  if (tol <= 0) throw ModelError("find_feasible: tol must be positive");
  CompactLp relaxed = lp;
  relaxed.p.setZero();
  SolverOptions saved = opts_;
  opts_.feas_tol = tol / (1.0 + lp.d.cwiseAbs().maxCoeff());
  impl_->opts = opts_;
  impl_->opts.warm_start = false;
  PrimalDualSolution sol = impl_->run_primal(relaxed);
  opts_ = saved;

  AdmissibleDataFlag flag;
  flag.feasible = sol.status == SolveStatus::Optimal;
  if (flag.feasible) flag.certificate = sol.z;
  return flag;
}

SimplexSolver::WarmState SimplexSolver::snapshot() const {
  WarmState state;
  if (impl_->have_state) {
    state.vstat = impl_->vstat;
    state.basic = impl_->basic;
  }
  return state;
}

void SimplexSolver::restore(const WarmState& state) {
  if (state.basic.empty() && state.vstat.empty()) {
    impl_->have_state = false;
    return;
  }
  impl_->vstat = state.vstat;
  impl_->basic = state.basic;
  impl_->have_state = true;
}

void SimplexSolver::clear_warm_state() { impl_->have_state = false; }
bool SimplexSolver::has_warm_state() const { return impl_->have_state; }

PrimalDualSolution solve(const CompactLp& lp) {
  SimplexSolver solver;
  return solver.solve(lp);
}

AdmissibleDataFlag check_admissible(const CompactLp& lp, double tol) {
  SimplexSolver solver;
  return solver.find_feasible(lp, tol);
}

KktResiduals kkt_residuals(const CompactLp& lp, const Vector& z, const Vector& lambda) {
  KktResiduals res;
  const Vector slack = lp.apply_G(z) - lp.d;
  res.primal = std::max(0.0, -slack.minCoeff());
  res.dual = lambda.size() ? std::max(0.0, -lambda.minCoeff()) : 0.0;
  for (int r = 0; r < lp.num_rows(); ++r)
    res.complementarity = std::max(res.complementarity, std::abs(lambda[r] * slack[r]));
  res.stationarity = (lp.p - lp.apply_Gt(lambda)).cwiseAbs().maxCoeff();
  return res;
}

}  // namespace dhmpc
