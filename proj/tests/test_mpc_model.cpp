#include <doctest.h>

#include <random>

#include "dhmpc/instance_io.hpp"
#include "dhmpc/lp_solver.hpp"
#include "dhmpc/mpc_model.hpp"
#include "test_support.hpp"

using namespace dhmpc;
using dhmpc::testing::random_instance;
using dhmpc::testing::RandomInstanceOptions;
using dhmpc::testing::trajectory_feasible;

TEST_CASE("stage_dims formula") {
  CHECK(stage_dims(2, 14, 6) == std::pair<int, int>{16, 48});
  CHECK(stage_dims(1, 0, 0) == std::pair<int, int>{1, 4});
  CHECK(stage_dims(3, 2, 1) == std::pair<int, int>{5, 18});
  CHECK_THROWS_AS(stage_dims(0, 1, 1), ModelError);
}

namespace {

StageSpec scalar_stage(double v, double w, double x_lo, double x_hi, double u_lo, double u_hi) {
  StageSpec s;
  s.A = Matrix::Constant(1, 1, 1.0);
  s.B = Matrix::Constant(1, 1, 1.0);
  s.E = Matrix::Constant(1, 1, 1.0);
  s.F = Matrix::Constant(1, 1, 2.0);
  s.q = Vector::Constant(1, 1.0);
  s.r = Vector::Constant(1, 0.5);
  s.v = Vector::Constant(1, v);
  s.w = Vector::Constant(1, w);
  s.x_lo = Vector::Constant(1, x_lo);
  s.x_hi = Vector::Constant(1, x_hi);
  s.u_lo = Vector::Constant(1, u_lo);
  s.u_hi = Vector::Constant(1, u_hi);
  return s;
}

}  // namespace

TEST_CASE("to_compact row ordering for a scalar one-stage problem") {
  const StageSpec s = scalar_stage(0.7, 1.3, -1.0, 2.0, -3.0, 4.0);
  const CompactLp lp = to_compact(MpcProblem::uniform(s, 1));
  REQUIRE(lp.m == 8);
  REQUIRE(lp.n == 2);
  // d_1 = (v, -v, w, -w, x_lo, -x_hi, u_lo, -u_hi)
  CHECK(lp.d[0] == 0.7);
  CHECK(lp.d[1] == -0.7);
  CHECK(lp.d[2] == 1.3);
  CHECK(lp.d[3] == -1.3);
  CHECK(lp.d[4] == -1.0);
  CHECK(lp.d[5] == -2.0);
  CHECK(lp.d[6] == -3.0);
  CHECK(lp.d[7] == -4.0);
  // and G_{1,1} rows: (I 0), (-I 0), (E F), (-E -F), (I 0), (-I 0), (0 I), (0 -I)
  const Matrix& Gd = lp.G_diag[0];
  CHECK(Gd(0, 0) == 1.0);
  CHECK(Gd(0, 1) == 0.0);
  CHECK(Gd(1, 0) == -1.0);
  CHECK(Gd(2, 0) == 1.0);
  CHECK(Gd(2, 1) == 2.0);
  CHECK(Gd(3, 0) == -1.0);
  CHECK(Gd(3, 1) == -2.0);
  CHECK(Gd(4, 0) == 1.0);
  CHECK(Gd(5, 0) == -1.0);
  CHECK(Gd(6, 1) == 1.0);
  CHECK(Gd(7, 1) == -1.0);
}

TEST_CASE("identity block leads every diagonal block") {
  const auto inst = random_instance({.N = 4, .nx = 2, .nu = 2, .nw = 1, .seed = 11});
  const CompactLp lp = to_compact(inst.problem);
  for (int i = 0; i < lp.N; ++i) {
    CHECK(lp.G_diag[i].block(0, 0, 2, 2).isIdentity(0.0));
    CHECK(lp.G_diag[i].block(0, 2, 2, 2).isZero(0.0));
  }
}

TEST_CASE("block bandedness: dense G vanishes off the two diagonals") {
  const auto inst = random_instance({.N = 5, .nx = 2, .nu = 1, .nw = 1, .seed = 3});
  const CompactLp lp = to_compact(inst.problem);
  const Matrix G = lp.dense_G();
  for (int i = 0; i < lp.N; ++i)
    for (int j = 0; j < lp.N; ++j) {
      if (i - j == 0 || i - j == 1) continue;
      CHECK(G.block(i * lp.m, j * lp.n, lp.m, lp.n).isZero(0.0));
    }
}

TEST_CASE("compact-form feasibility equals direct stage-wise evaluation") {
  // Oracle: evaluate the stage-wise constraints directly on random
  // trajectories and compare with G z >= d.
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unit(-1.5, 1.5);
  int agree = 0, total = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const auto inst = random_instance({.N = 3, .nx = 2, .nu = 2, .nw = 1, .seed = static_cast<std::uint64_t>(1000 + rep)});
    const CompactLp lp = to_compact(inst.problem);

    // The planted trajectory must pass both routes.
    REQUIRE(trajectory_feasible(inst.problem, inst.z_feasible, 1e-9));
    REQUIRE(((lp.apply_G(inst.z_feasible) - lp.d).minCoeff()) >= -1e-9);

    for (int k = 0; k < 10; ++k) {
      Vector z = inst.z_feasible;
      for (int c = 0; c < z.size(); ++c) z[c] += 0.4 * unit(rng);
      const bool direct = trajectory_feasible(inst.problem, z, 1e-9);
      const bool compact = (lp.apply_G(z) - lp.d).minCoeff() >= -1e-9;
      ++total;
      if (direct == compact) ++agree;
    }
  }
  CHECK(agree == total);
}

TEST_CASE("objective round-trip between the two forms") {
  const auto inst = random_instance({.N = 4, .nx = 2, .nu = 3, .nw = 2, .seed = 21});
  const CompactLp lp = to_compact(inst.problem);
  const double direct = dhmpc::testing::trajectory_cost(inst.problem, inst.z_feasible);
  const double compact = lp.p.dot(inst.z_feasible);
  CHECK(std::abs(direct - compact) <= 1e-10 * (1.0 + std::abs(direct)));
}

TEST_CASE("constructor rejects invalid stages") {
  StageSpec s = scalar_stage(0, 0, -1, 1, -1, 1);
  s.x_hi[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(MpcProblem::uniform(s, 2), ModelError);
  s = scalar_stage(0, 0, 2, 1, -1, 1);  // crossed bounds
  CHECK_THROWS_AS(MpcProblem::uniform(s, 2), ModelError);
  s = scalar_stage(0, 0, -1, 1, -1, 1);
  s.B = Matrix::Zero(2, 1);  // wrong shape
  CHECK_THROWS_AS(MpcProblem::uniform(s, 2), ModelError);
}

TEST_CASE("check_admissible on forced initial conditions") {
  // x0 = 0.5 inside [0, 1]: feasible.
  StageSpec s = scalar_stage(0.5, 0.0, 0.0, 1.0, -1.0, 1.0);
  s.E = Matrix::Zero(1, 1);
  s.F = Matrix::Constant(1, 1, 1.0);  // w row: u = 0
  auto flag = check_admissible(to_compact(MpcProblem::uniform(s, 1)), 1e-8);
  CHECK(flag.feasible);
  REQUIRE(flag.certificate.size() == 2);
  CHECK(flag.certificate[0] == doctest::Approx(0.5));

  // v = 2 above x_hi = 1: infeasible.
  s.v[0] = 2.0;
  flag = check_admissible(to_compact(MpcProblem::uniform(s, 1)), 1e-8);
  CHECK_FALSE(flag.feasible);
}

TEST_CASE("admissible set is convex along sampled segments") {
  // Two feasible data vectors for the same G; every sampled convex
  // combination must stay feasible.
  const auto a = random_instance({.N = 3, .nx = 1, .nu = 2, .nw = 1, .seed = 5});
  const auto b = random_instance({.N = 3, .nx = 1, .nu = 2, .nw = 1, .seed = 6});
  CompactLp lp_a = to_compact(a.problem);
  const CompactLp lp_b = to_compact(b.problem);
  // Same instance structure is required: rebuild b's data on a's G by
  // mixing only d (G differs across instances, so use lp_a's G with both
  // its own d and a shifted feasible d built from b's planted point).
  const Vector d2 = lp_a.apply_G(a.z_feasible * 0.5) - Vector::Constant(lp_a.num_rows(), 0.05);
  REQUIRE(check_admissible(lp_a, 1e-8).feasible);
  CompactLp mix = lp_a;
  mix.d = d2;
  REQUIRE(check_admissible(mix, 1e-8).feasible);
  for (double t : {0.25, 0.5, 0.75}) {
    mix.d = (1 - t) * lp_a.d + t * d2;
    CHECK(check_admissible(mix, 1e-8).feasible);
  }
  (void)lp_b;
}

TEST_CASE("instance JSON round trip") {
  const auto inst = random_instance({.N = 3, .nx = 2, .nu = 1, .nw = 1, .seed = 77});
  const std::string text = instance_to_json(inst.problem);
  const MpcProblem back = parse_instance_json(text);
  CHECK(back.dims() == inst.problem.dims());
  for (int i = 0; i < 3; ++i) {
    CHECK((back.stage(i).v - inst.problem.stage(i).v).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.stage(i).w - inst.problem.stage(i).w).cwiseAbs().maxCoeff() == 0.0);
  }
  // series validation: truncated series must be rejected
  CHECK_THROWS_AS(parse_instance_json(R"({"dims":{"nx":1,"nu":1,"nw":0,"N":2},
    "time_invariant":{"A":[1],"B":[1],"E":[],"F":[],
      "x_lo":[0],"x_hi":[1],"u_lo":[0],"u_hi":[1]},
    "series":{"v":[[0.1]]}})"),
                  ModelError);
}
