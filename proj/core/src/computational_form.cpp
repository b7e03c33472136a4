#include "dhmpc/computational_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dhmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using SparseRow = std::vector<std::pair<int, double>>;  // (col, value), ascending

SparseRow extract_row(const CompactLp& lp, int r) {
  SparseRow row;
  const int i = r / lp.m;
  const int l = r % lp.m;
  if (i > 0) {
    for (int c = 0; c < lp.n; ++c) {
      const double v = lp.G_sub[i](l, c);
      if (v != 0.0) row.emplace_back((i - 1) * lp.n + c, v);
    }
  }
  for (int c = 0; c < lp.n; ++c) {
    const double v = lp.G_diag[i](l, c);
    if (v != 0.0) row.emplace_back(i * lp.n + c, v);
  }
  return row;
}

bool is_negation(const SparseRow& a, const SparseRow& b) {
  if (a.size() != b.size()) return false;
  for (size_t k = 0; k < a.size(); ++k)
    if (a[k].first != b[k].first || a[k].second != -b[k].second) return false;
  return true;
}

}  // namespace

ComputationalForm ComputationalForm::build(const CompactLp& lp) {
  lp.validate();
  ComputationalForm cf;
  cf.num_vars = lp.num_vars();
  cf.var_lo.setConstant(cf.num_vars, -kInf);
  cf.var_hi.setConstant(cf.num_vars, kInf);
  cf.var_src_lo.assign(cf.num_vars, -1);
  cf.var_src_hi.assign(cf.num_vars, -1);
  cf.var_src_lo_coef.assign(cf.num_vars, 0.0);
  cf.var_src_hi_coef.assign(cf.num_vars, 0.0);
  cf.var_lower_cands.assign(cf.num_vars, {});
  cf.var_upper_cands.assign(cf.num_vars, {});

  std::vector<Eigen::Triplet<double>> trips;

  for (int stage = 0; stage < lp.N; ++stage) {
    std::vector<int> multi;          // local indices of multi-entry rows
    std::vector<SparseRow> rows(lp.m);
    for (int l = 0; l < lp.m; ++l) {
      const int r = stage * lp.m + l;
      rows[l] = extract_row(lp, r);
      if (rows[l].empty()) {
        cf.redundant_rows.push_back(r);
      } else if (rows[l].size() == 1) {
        const auto [col, coef] = rows[l][0];
        if (coef > 0.0)
          cf.var_lower_cands[col].emplace_back(r, coef);
        else
          cf.var_upper_cands[col].emplace_back(r, coef);
      } else {
        multi.push_back(l);
      }
    }

    std::vector<char> paired(lp.m, 0);
    for (size_t a = 0; a < multi.size(); ++a) {
      const int la = multi[a];
      if (paired[la]) continue;
      int partner = -1;
      for (size_t b = a + 1; b < multi.size(); ++b) {
        const int lb = multi[b];
        if (!paired[lb] && is_negation(rows[la], rows[lb])) {
          partner = lb;
          break;
        }
      }
      const int k = cf.num_rows++;
      cf.row_src_lo.push_back(stage * lp.m + la);
      cf.row_src_hi.push_back(partner >= 0 ? stage * lp.m + partner : -1);
      cf.row_stage.push_back(stage);
      if (partner >= 0) paired[partner] = 1;
      for (const auto& [col, val] : rows[la]) trips.emplace_back(k, col, val);
    }
  }

  cf.C.resize(cf.num_rows, cf.num_vars);
  cf.C.setFromTriplets(trips.begin(), trips.end());
  cf.C.makeCompressed();
  cf.Ct = cf.C.transpose();
  cf.Ct.makeCompressed();

  cf.stage_row_start.assign(lp.N + 1, cf.num_rows);
  for (int k = cf.num_rows - 1; k >= 0; --k)
    for (int t = cf.row_stage[k]; t >= 0 && cf.stage_row_start[t] > k; --t)
      cf.stage_row_start[t] = k;

  cf.refresh_bounds(lp);
  return cf;
}

void ComputationalForm::refresh_bounds(const CompactLp& lp) {
  const double tol = 1e-8 * (1.0 + lp.d.cwiseAbs().maxCoeff());
  bound_infeasible = false;
  infeasible_witness = -1;

  for (int r : redundant_rows) {
    if (lp.d[r] > tol) {
      bound_infeasible = true;
      infeasible_witness = r;
    }
  }

  row_lo.resize(num_rows);
  row_hi.resize(num_rows);
  for (int k = 0; k < num_rows; ++k) {
    row_lo[k] = lp.d[row_src_lo[k]];
    row_hi[k] = row_src_hi[k] >= 0 ? -lp.d[row_src_hi[k]] : kInf;
    if (row_lo[k] > row_hi[k]) {
      if (row_lo[k] - row_hi[k] <= tol) {
        row_hi[k] = row_lo[k];
      } else {
        bound_infeasible = true;
        infeasible_witness = row_src_lo[k];
      }
    }
  }

  for (int j = 0; j < num_vars; ++j) {
    double lo = -kInf, hi = kInf;
    int src_lo = -1, src_hi = -1;
    double coef_lo = 0.0, coef_hi = 0.0;
    for (const auto& [r, coef] : var_lower_cands[j]) {
      const double b = lp.d[r] / coef;
      if (b > lo) {
        lo = b;
        src_lo = r;
        coef_lo = coef;
      }
    }
    for (const auto& [r, coef] : var_upper_cands[j]) {
      const double b = lp.d[r] / coef;  // coef < 0
      if (b < hi) {
        hi = b;
        src_hi = r;
        coef_hi = coef;
      }
    }
    if (lo > hi) {
      if (lo - hi <= tol) {
        hi = lo;
      } else {
        bound_infeasible = true;
        infeasible_witness = src_lo;
      }
    }
    var_lo[j] = lo;
    var_hi[j] = hi;
    var_src_lo[j] = src_lo;
    var_src_hi[j] = src_hi;
    var_src_lo_coef[j] = coef_lo;
    var_src_hi_coef[j] = coef_hi;
  }
}

bool ComputationalForm::same_structure(const ComputationalForm& other) const {
  return num_vars == other.num_vars && num_rows == other.num_rows &&
         row_src_lo == other.row_src_lo && row_src_hi == other.row_src_hi &&
         var_lower_cands == other.var_lower_cands &&
         var_upper_cands == other.var_upper_cands;
}

}  // namespace dhmpc
