#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "dhmpc/lp_solver.hpp"
#include "dhmpc/mpc_model.hpp"
#include "test_support.hpp"

using namespace dhmpc;
using dhmpc::testing::random_instance;

namespace {

/// Free-form one-stage LP: min p'z s.t. G z >= d with a single stage.
CompactLp tiny_lp(const Matrix& G, const Vector& d, const Vector& p) {
  CompactLp lp;
  lp.N = 1;
  lp.n = static_cast<int>(G.cols());
  lp.m = static_cast<int>(G.rows());
  lp.p = p;
  lp.d = d;
  lp.G_diag = {G};
  lp.G_sub = {Matrix()};
  return lp;
}

void check_kkt(const CompactLp& lp, const PrimalDualSolution& sol) {
  REQUIRE(sol.status == SolveStatus::Optimal);
  const double scale_d = 1.0 + lp.d.cwiseAbs().maxCoeff();
  const double scale_p = 1.0 + lp.p.cwiseAbs().maxCoeff();
  const KktResiduals kkt = kkt_residuals(lp, sol.z, sol.lambda);
  CHECK(kkt.primal <= 1e-8 * scale_d);
  CHECK(kkt.dual <= 1e-8 * scale_p);
  CHECK(kkt.stationarity <= 1e-7 * scale_p);
  CHECK(kkt.complementarity <= 1e-6 * scale_d * scale_p);

  // The returned point is the basic solution of the returned basis.
  const Vector zb = basic_solution(lp, sol.basis, lp.d);
  CHECK((zb - sol.z).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + sol.z.cwiseAbs().maxCoeff()));

  // Basis validity: sigma_min above 1e-10 * sigma_max.
  Matrix GB(lp.num_vars(), lp.num_vars());
  for (int k = 0; k < lp.num_vars(); ++k) GB.row(k) = lp.dense_row(sol.basis.rows[k]);
  const auto sv = Eigen::JacobiSVD<Matrix>(GB).singularValues();
  CHECK(sv[sv.size() - 1] > 1e-10 * sv[0]);
}

}  // namespace

TEST_CASE("one-dimensional LPs") {
  const Matrix G = (Matrix(2, 1) << 1.0, -1.0).finished();
  const Vector d = (Vector(2) << 3.0, -5.0).finished();

  auto sol = solve(tiny_lp(G, d, Vector::Constant(1, 1.0)));
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.z[0] == doctest::Approx(3.0));
  CHECK(sol.objective == doctest::Approx(3.0));
  CHECK(sol.basis.rows == std::vector<int>{0});  // the active row x >= 3
  CHECK(sol.lambda[0] == doctest::Approx(1.0));

  sol = solve(tiny_lp(G, d, Vector::Constant(1, -1.0)));
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.z[0] == doctest::Approx(5.0));
  CHECK(sol.objective == doctest::Approx(-5.0));
}

TEST_CASE("unbounded detection") {
  const Matrix G = (Matrix(1, 1) << 1.0).finished();
  const auto sol = solve(tiny_lp(G, Vector::Zero(1), Vector::Constant(1, -1.0)));
  CHECK(sol.status == SolveStatus::Unbounded);
}

TEST_CASE("infeasible initial condition") {
  // x = 2 forced by the initial-condition rows, but x <= 1.
  const Matrix G = (Matrix(4, 1) << 1.0, -1.0, 1.0, -1.0).finished();
  const Vector d = (Vector(4) << 2.0, -2.0, 0.0, -1.0).finished();
  const auto sol = solve(tiny_lp(G, d, Vector::Constant(1, 1.0)));
  CHECK(sol.status == SolveStatus::Infeasible);
  CHECK(brute_force_solve(tiny_lp(G, d, Vector::Constant(1, 1.0))).status ==
        SolveStatus::Infeasible);
}

TEST_CASE("brute force agrees with simplex on the 1-D examples") {
  const Matrix G = (Matrix(2, 1) << 1.0, -1.0).finished();
  const Vector d = (Vector(2) << 3.0, -5.0).finished();
  auto bf = brute_force_solve(tiny_lp(G, d, Vector::Constant(1, 1.0)));
  REQUIRE(bf.status == SolveStatus::Optimal);
  CHECK(bf.objective == doctest::Approx(3.0));
  bf = brute_force_solve(tiny_lp(G, d, Vector::Constant(1, -1.0)));
  CHECK(bf.objective == doctest::Approx(-5.0));
}

TEST_CASE("brute force cap") {
  const auto inst = random_instance({.N = 4, .nx = 2, .nu = 2, .nw = 1, .seed = 17});
  CHECK_THROWS_AS(brute_force_solve(to_compact(inst.problem)), TooLarge);
}

TEST_CASE("oracle equivalence: simplex vs enumeration on 50 seeds") {
  for (int seed = 0; seed < 50; ++seed) {
    const auto inst = random_instance({.N = 2, .nx = 1, .nu = 1, .nw = 0,
                                       .seed = static_cast<std::uint64_t>(seed)});
    const CompactLp lp = to_compact(inst.problem);
    const auto fast = solve(lp);
    const auto slow = brute_force_solve(lp);
    REQUIRE(fast.status == SolveStatus::Optimal);
    REQUIRE(slow.status == SolveStatus::Optimal);
    CHECK(std::abs(fast.objective - slow.objective) <=
          1e-8 * (1.0 + std::abs(slow.objective)));
    check_kkt(lp, fast);
    check_kkt(lp, slow);
  }
}

TEST_CASE("KKT and basis invariants on wider random instances") {
  for (int seed = 0; seed < 25; ++seed) {
    const auto inst = random_instance({.N = 3, .nx = 2, .nu = 2, .nw = 1,
                                       .seed = 500 + static_cast<std::uint64_t>(seed)});
    const CompactLp lp = to_compact(inst.problem);
    const auto sol = solve(lp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    // Optimality sanity: no worse than the planted feasible point.
    CHECK(sol.objective <= lp.p.dot(inst.z_feasible) + 1e-8);
    check_kkt(lp, sol);
  }
}

TEST_CASE("basic_solution basics") {
  // Identity basis rows: z = d[B].
  const Matrix G = (Matrix(4, 2) << 1, 0, 0, 1, -1, 0, 0, -1).finished();
  const Vector d = (Vector(4) << 1.0, 2.0, -5.0, -5.0).finished();
  const CompactLp lp = tiny_lp(G, d, Vector::Ones(2));
  Basis basis;
  basis.rows = {0, 1};
  const Vector z = basic_solution(lp, basis, d);
  CHECK(z[0] == doctest::Approx(1.0));
  CHECK(z[1] == doctest::Approx(2.0));

  // Affine in d, and linear since z^B(0) = 0.
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vector da(4), db(4);
  for (int i = 0; i < 4; ++i) {
    da[i] = unit(rng);
    db[i] = unit(rng);
  }
  const Vector za = basic_solution(lp, basis, da);
  const Vector zb = basic_solution(lp, basis, db);
  const Vector zab = basic_solution(lp, basis, da + db);
  CHECK((zab - za - zb).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(basic_solution(lp, basis, Vector::Zero(4)).cwiseAbs().maxCoeff() == 0.0);

  Basis singular;
  singular.rows = {0, 2};  // x >= 1 and -x >= -5: rank 1 in 2 variables
  CHECK_THROWS_AS(basic_solution(lp, singular, d), ModelError);
}

TEST_CASE("basic_solution of the solver basis reproduces the solver point") {
  for (int seed = 0; seed < 10; ++seed) {
    const auto inst = random_instance({.N = 3, .nx = 1, .nu = 2, .nw = 1,
                                       .seed = 900 + static_cast<std::uint64_t>(seed)});
    const CompactLp lp = to_compact(inst.problem);
    const auto sol = solve(lp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    const Vector z = basic_solution(lp, sol.basis, lp.d);
    CHECK((z - sol.z).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + sol.z.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("extract_basis at a nondegenerate vertex returns the active set") {
  // min x + y s.t. x >= 1, y >= 2 (plus far-away caps): vertex (1, 2).
  const Matrix G = (Matrix(4, 2) << 1, 0, 0, 1, -1, 0, 0, -1).finished();
  const Vector d = (Vector(4) << 1.0, 2.0, -9.0, -9.0).finished();
  const CompactLp lp = tiny_lp(G, d, Vector::Ones(2));
  const auto sol = solve(lp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  const Basis b = extract_basis(lp, sol.z, sol.lambda, 1e-8);
  CHECK(b.rows == std::vector<int>{0, 1});
}

TEST_CASE("extract_basis at a degenerate vertex keeps the multiplier support") {
  // Three rows through the optimal vertex (0,0) of min x + y.
  const Matrix G = (Matrix(5, 2) << 1, 0, 0, 1, 1, 1, -1, 0, 0, -1).finished();
  const Vector d = (Vector(5) << 0.0, 0.0, 0.0, -9.0, -9.0).finished();
  const CompactLp lp = tiny_lp(G, d, Vector::Ones(2));
  const auto sol = solve(lp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.z.cwiseAbs().maxCoeff() <= 1e-9);

  const Basis b = extract_basis(lp, sol.z, sol.lambda, 1e-8);
  // Nonsingular and contains every row with lambda > tol; all three
  // candidate rows are active, so check against enumeration of the
  // nonsingular pairs {0,1}, {0,2}, {1,2}.
  Matrix GB(2, 2);
  GB.row(0) = lp.dense_row(b.rows[0]);
  GB.row(1) = lp.dense_row(b.rows[1]);
  CHECK(std::abs(GB.determinant()) > 1e-12);
  for (int r = 0; r < 5; ++r)
    if (sol.lambda[r] > 1e-8)
      CHECK(std::find(b.rows.begin(), b.rows.end(), r) != b.rows.end());

  // A multiplier on an inactive row must be rejected.
  Vector bad = sol.lambda;
  bad[3] = 1.0;
  CHECK_THROWS_AS(extract_basis(lp, sol.z, bad, 1e-8), ModelError);
}

TEST_CASE("warm start across data changes matches cold solves") {
  SimplexSolver warm;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  const auto inst = random_instance({.N = 4, .nx = 2, .nu = 2, .nw = 1, .seed = 12});
  CompactLp lp = to_compact(inst.problem);
  auto first = warm.solve(lp);
  REQUIRE(first.status == SolveStatus::Optimal);

  for (int rep = 0; rep < 50; ++rep) {
    CompactLp perturbed = lp;
    for (int r = 0; r < perturbed.num_rows(); ++r) perturbed.d[r] += 0.05 * unit(rng);
    const auto via_dual = warm.resolve_new_data(perturbed);
    const auto cold = solve(perturbed);
    REQUIRE(via_dual.status == cold.status);
    if (cold.status == SolveStatus::Optimal) {
      CHECK(std::abs(via_dual.objective - cold.objective) <=
            1e-8 * (1.0 + std::abs(cold.objective)));
      check_kkt(perturbed, via_dual);
    }
  }
}

TEST_CASE("warm start with changed costs falls back to a correct solve") {
  SimplexSolver solver;
  const auto inst = random_instance({.N = 3, .nx = 1, .nu = 2, .nw = 1, .seed = 44});
  CompactLp lp = to_compact(inst.problem);
  REQUIRE(solver.solve(lp).status == SolveStatus::Optimal);

  CompactLp changed = lp;
  changed.p = -lp.p;
  const auto warm = solver.solve(changed);
  const auto cold = solve(changed);
  REQUIRE(warm.status == SolveStatus::Optimal);
  CHECK(std::abs(warm.objective - cold.objective) <= 1e-8 * (1.0 + std::abs(cold.objective)));
}

TEST_CASE("find_feasible produces a certificate") {
  const auto inst = random_instance({.N = 3, .nx = 2, .nu = 1, .nw = 1, .seed = 71});
  const CompactLp lp = to_compact(inst.problem);
  const auto flag = check_admissible(lp, 1e-8);
  REQUIRE(flag.feasible);
  CHECK((lp.apply_G(flag.certificate) - lp.d).minCoeff() >= -1e-8 * (1.0 + lp.d.cwiseAbs().maxCoeff()));
}
