#include "dhmpc/banded_lu.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dhmpc {

void BandedLu::reset(int n, int kl, int ku) {
  if (n < 0 || kl < 0 || ku < 0) throw std::invalid_argument("BandedLu: bad shape");
  n_ = n;
  kl_ = std::min(kl, n > 0 ? n - 1 : 0);
  ku_ = std::min(ku, n > 0 ? n - 1 : 0);
  ab_.setZero(2 * kl_ + ku_ + 1, n_);
  piv_.assign(n_, 0);
  factored_ = false;
}

bool BandedLu::factor() {
  if (n_ == 0) {
    factored_ = true;
    return true;
  }
  const int band = kl_ + ku_;  // upper bandwidth after fill
  const double scale = std::max(ab_.cwiseAbs().maxCoeff(), 1.0);
  const double tiny = 1e-14 * scale;

  for (int j = 0; j < n_; ++j) {
    // Pivot search within the kl rows below the diagonal.
    const int ilast = std::min(j + kl_, n_ - 1);
    int p = j;
    double best = std::abs(ab_(kl_ + ku_, j));
    for (int i = j + 1; i <= ilast; ++i) {
      const double v = std::abs(ab_(i - j + kl_ + ku_, j));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    piv_[j] = p;
    if (best <= tiny) return false;

    const int clast = std::min(j + band, n_ - 1);
    if (p != j) {
      for (int c = j; c <= clast; ++c)
        std::swap(ab_(j - c + kl_ + ku_, c), ab_(p - c + kl_ + ku_, c));
    }

    const double pivot = ab_(kl_ + ku_, j);
    const int nrows = ilast - j;
    if (nrows > 0) {
      ab_.col(j).segment(kl_ + ku_ + 1, nrows) /= pivot;
      for (int c = j + 1; c <= clast; ++c) {
        const double ujc = ab_(j - c + kl_ + ku_, c);
        if (ujc == 0.0) continue;
        ab_.col(c).segment(j + 1 - c + kl_ + ku_, nrows).noalias() -=
            ujc * ab_.col(j).segment(kl_ + ku_ + 1, nrows);
      }
    }
  }
  factored_ = true;
  return true;
}

void BandedLu::solve_in_place(Eigen::VectorXd& b) const {
  const int band = kl_ + ku_;
  // Forward: apply P and L^{-1}.
  for (int j = 0; j < n_; ++j) {
    if (piv_[j] != j) std::swap(b[j], b[piv_[j]]);
    const double bj = b[j];
    if (bj == 0.0) continue;
    const int ilast = std::min(j + kl_, n_ - 1);
    for (int i = j + 1; i <= ilast; ++i) b[i] -= ab_(i - j + kl_ + ku_, j) * bj;
  }
  // Backward: U^{-1}.
  for (int j = n_ - 1; j >= 0; --j) {
    double s = b[j];
    const int clast = std::min(j + band, n_ - 1);
    for (int c = j + 1; c <= clast; ++c) s -= ab_(j - c + kl_ + ku_, c) * b[c];
    b[j] = s / ab_(kl_ + ku_, j);
  }
}

void BandedLu::solve_transpose_in_place(Eigen::VectorXd& b) const {
  const int band = kl_ + ku_;
  // U' y = b (forward substitution over columns of U).
  for (int j = 0; j < n_; ++j) {
    double s = b[j];
    const int ifirst = std::max(0, j - band);
    for (int i = ifirst; i < j; ++i) s -= ab_(i - j + kl_ + ku_, j) * b[i];
    b[j] = s / ab_(kl_ + ku_, j);
  }
  // L' z = y (unit upper backward substitution) interleaved with P'.
  for (int j = n_ - 1; j >= 0; --j) {
    double s = b[j];
    const int ilast = std::min(j + kl_, n_ - 1);
    for (int i = j + 1; i <= ilast; ++i) s -= ab_(i - j + kl_ + ku_, j) * b[i];
    b[j] = s;
    if (piv_[j] != j) std::swap(b[j], b[piv_[j]]);
  }
}

}  // namespace dhmpc
