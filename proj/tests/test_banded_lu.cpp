#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "dhmpc/banded_lu.hpp"

using dhmpc::BandedLu;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_banded(int n, int kl, int ku, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  MatrixXd M = MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = std::max(0, j - ku); i <= std::min(n - 1, j + kl); ++i) M(i, j) = unit(rng);
  M.diagonal().array() += 3.0;  // keep it comfortably nonsingular
  return M;
}

}  // namespace

TEST_CASE("banded solve matches dense LU on random banded systems") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 1 + static_cast<int>(rng() % 40);
    const int kl = static_cast<int>(rng() % 5);
    const int ku = static_cast<int>(rng() % 5);
    const MatrixXd M = random_banded(n, kl, ku, 100 + rep);

    BandedLu lu;
    lu.reset(n, kl, ku);
    for (int j = 0; j < n; ++j)
      for (int i = std::max(0, j - ku); i <= std::min(n - 1, j + kl); ++i)
        if (M(i, j) != 0.0) lu.at(i, j) = M(i, j);
    REQUIRE(lu.factor());

    VectorXd b(n);
    for (int i = 0; i < n; ++i) b[i] = unit(rng);

    VectorXd x = b;
    lu.solve_in_place(x);
    CHECK((M * x - b).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + b.cwiseAbs().maxCoeff()));

    VectorXd y = b;
    lu.solve_transpose_in_place(y);
    CHECK((M.transpose() * y - b).cwiseAbs().maxCoeff() <=
          1e-10 * (1.0 + b.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("pivoting handles zero diagonals") {
  // [0 1; 1 0] needs a row swap.
  BandedLu lu;
  lu.reset(2, 1, 1);
  lu.at(0, 1) = 1.0;
  lu.at(1, 0) = 1.0;
  REQUIRE(lu.factor());
  VectorXd b(2);
  b << 3.0, 7.0;
  VectorXd x = b;
  lu.solve_in_place(x);
  CHECK(x[0] == doctest::Approx(7.0));
  CHECK(x[1] == doctest::Approx(3.0));
}

TEST_CASE("singular matrix is reported") {
  BandedLu lu;
  lu.reset(2, 1, 1);
  lu.at(0, 0) = 1.0;
  lu.at(0, 1) = 2.0;
  lu.at(1, 0) = 0.5;
  lu.at(1, 1) = 1.0;
  CHECK_FALSE(lu.factor());
}

TEST_CASE("empty system") {
  BandedLu lu;
  lu.reset(0, 0, 0);
  CHECK(lu.factor());
}
