#pragma once

#include <Eigen/Core>

#include <vector>

namespace dhmpc {

/// LU factorization with partial pivoting for square banded matrices,
/// LAPACK-style band storage. Lower bandwidth kl, upper bandwidth ku;
/// pivoting fills the upper band to ku + kl.
class BandedLu {
 public:
  BandedLu() = default;

  /// Prepares zeroed storage for an n x n matrix with the given bandwidths.
  void reset(int n, int kl, int ku);

  int size() const { return n_; }

  /// Assembly access to entry (i, j). Requires -ku <= i - j <= kl.
  double& at(int i, int j) {
    return ab_(i - j + kl_ + ku_, j);
  }

  /// Factors in place. Returns false if a zero pivot is met (singular to
  /// working precision, threshold relative to the largest assembled entry).
  bool factor();

  /// Solves A x = b in place. Requires factor() == true.
  void solve_in_place(Eigen::VectorXd& b) const;

  /// Solves A' x = b in place.
  void solve_transpose_in_place(Eigen::VectorXd& b) const;

 private:
  int n_ = 0;
  int kl_ = 0;
  int ku_ = 0;
  bool factored_ = false;
  Eigen::MatrixXd ab_;           // (2*kl + ku + 1) x n band storage
  std::vector<int> piv_;
};

}  // namespace dhmpc
