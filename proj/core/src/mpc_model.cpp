#include "dhmpc/mpc_model.hpp"

#include <cmath>
#include <utility>

namespace dhmpc {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw ModelError(what);
}

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

std::pair<int, int> stage_dims(int nx, int nu, int nw) {
  require(nx >= 1, "stage_dims: nx must be >= 1");
  require(nu >= 0 && nw >= 0, "stage_dims: nu, nw must be >= 0");
  return {nx + nu, 4 * nx + 2 * nu + 2 * nw};
}

Dims StageSpec::validate() const {
  const int nx = static_cast<int>(q.size());
  const int nu = static_cast<int>(r.size());
  const int nw = static_cast<int>(w.size());
  require(nx >= 1, "StageSpec: nx must be >= 1");
  require(A.rows() == nx && A.cols() == nx, "StageSpec: A must be nx x nx");
  require(B.rows() == nx && B.cols() == nu, "StageSpec: B must be nx x nu");
  require(E.rows() == nw && E.cols() == nx, "StageSpec: E must be nw x nx");
  require(F.rows() == nw && F.cols() == nu, "StageSpec: F must be nw x nu");
  require(v.size() == nx, "StageSpec: v must have nx entries");
  require(x_lo.size() == nx && x_hi.size() == nx, "StageSpec: state bounds must have nx entries");
  require(u_lo.size() == nu && u_hi.size() == nu, "StageSpec: control bounds must have nu entries");
  require(all_finite(x_lo) && all_finite(x_hi) && all_finite(u_lo) && all_finite(u_hi),
          "StageSpec: bounds must be finite (compact feasible set)");
  require(all_finite(v) && all_finite(w) && all_finite(q) && all_finite(r),
          "StageSpec: data vectors must be finite");
  require(A.allFinite() && B.allFinite() && E.allFinite() && F.allFinite(),
          "StageSpec: matrices must be finite");
  require((x_lo.array() <= x_hi.array()).all(), "StageSpec: x_lo must be <= x_hi");
  require((u_lo.array() <= u_hi.array()).all(), "StageSpec: u_lo must be <= u_hi");
  return Dims{nx, nu, nw, 1};
}

MpcProblem::MpcProblem(std::vector<std::shared_ptr<const StageSpec>> stages)
    : stages_(std::move(stages)) {
  require(!stages_.empty(), "MpcProblem: horizon must be >= 1");
  dims_ = stages_.front()->validate();
  dims_.N = static_cast<int>(stages_.size());
  for (const auto& s : stages_) {
    require(s != nullptr, "MpcProblem: null stage");
    Dims d = s->validate();
    require(d.nx == dims_.nx && d.nu == dims_.nu && d.nw == dims_.nw,
            "MpcProblem: all stages must share (nx, nu, nw)");
  }
}

MpcProblem::MpcProblem(std::vector<StageSpec> stages)
    : MpcProblem([&] {
        std::vector<std::shared_ptr<const StageSpec>> out;
        out.reserve(stages.size());
        for (auto& s : stages) out.push_back(std::make_shared<const StageSpec>(std::move(s)));
        return out;
      }()) {}

MpcProblem MpcProblem::uniform(StageSpec stage, int N) {
  require(N >= 1, "MpcProblem: horizon must be >= 1");
  auto shared = std::make_shared<const StageSpec>(std::move(stage));
  return MpcProblem(std::vector<std::shared_ptr<const StageSpec>>(N, shared));
}

void MpcProblem::set_stage(int i, StageSpec s) {
  Dims d = s.validate();
  require(d.nx == dims_.nx && d.nu == dims_.nu && d.nw == dims_.nw,
          "MpcProblem: replacement stage must share (nx, nu, nw)");
  stages_.at(i) = std::make_shared<const StageSpec>(std::move(s));
}

void CompactLp::validate() const {
  require(N >= 1 && n >= 1 && m >= 1, "CompactLp: N, n, m must be >= 1");
  require(p.size() == n * N, "CompactLp: p must have n*N entries");
  require(d.size() == m * N, "CompactLp: d must have m*N entries");
  require(static_cast<int>(G_diag.size()) == N, "CompactLp: need N diagonal blocks");
  require(static_cast<int>(G_sub.size()) == N, "CompactLp: need N subdiagonal slots");
  for (int i = 0; i < N; ++i) {
    require(G_diag[i].rows() == m && G_diag[i].cols() == n,
            "CompactLp: diagonal block has wrong shape");
    if (i == 0) {
      require(G_sub[0].size() == 0, "CompactLp: G_sub[0] must be empty");
    } else {
      require(G_sub[i].rows() == m && G_sub[i].cols() == n,
              "CompactLp: subdiagonal block has wrong shape");
    }
  }
}

Matrix CompactLp::dense_G() const {
  Matrix G = Matrix::Zero(m * N, n * N);
  for (int i = 0; i < N; ++i) {
    G.block(i * m, i * n, m, n) = G_diag[i];
    if (i > 0) G.block(i * m, (i - 1) * n, m, n) = G_sub[i];
  }
  return G;
}

Vector CompactLp::apply_G(const Vector& z) const {
  Vector out = Vector::Zero(m * N);
  for (int i = 0; i < N; ++i) {
    out.segment(i * m, m) = G_diag[i] * z.segment(i * n, n);
    if (i > 0) out.segment(i * m, m) += G_sub[i] * z.segment((i - 1) * n, n);
  }
  return out;
}

Vector CompactLp::apply_Gt(const Vector& y) const {
  Vector out = Vector::Zero(n * N);
  for (int i = 0; i < N; ++i) {
    out.segment(i * n, n) = G_diag[i].transpose() * y.segment(i * m, m);
    if (i + 1 < N) out.segment(i * n, n) += G_sub[i + 1].transpose() * y.segment((i + 1) * m, m);
  }
  return out;
}

Vector CompactLp::dense_row(int r) const {
  Vector row = Vector::Zero(n * N);
  const int i = r / m;
  const int l = r % m;
  row.segment(i * n, n) = G_diag[i].row(l);
  if (i > 0) row.segment((i - 1) * n, n) = G_sub[i].row(l);
  return row;
}

CompactLp to_compact(const MpcProblem& problem) {
  const Dims dims = problem.dims();
  const auto [n, m] = stage_dims(dims.nx, dims.nu, dims.nw);
  const int nx = dims.nx, nu = dims.nu, nw = dims.nw, N = dims.N;

  CompactLp lp;
  lp.N = N;
  lp.n = n;
  lp.m = m;
  lp.p.resize(n * N);
  lp.d.resize(m * N);
  lp.G_diag.assign(N, Matrix());
  lp.G_sub.assign(N, Matrix());

  for (int i = 0; i < N; ++i) {
    const StageSpec& s = problem.stage(i);

    lp.p.segment(i * n, nx) = s.q;
    lp.p.segment(i * n + nx, nu) = s.r;

    // d_i = (v, -v, w, -w, x_lo, -x_hi, u_lo, -u_hi)
    Eigen::Ref<Vector> di = lp.d.segment(i * m, m);
    di.segment(0, nx) = s.v;
    di.segment(nx, nx) = -s.v;
    di.segment(2 * nx, nw) = s.w;
    di.segment(2 * nx + nw, nw) = -s.w;
    di.segment(2 * nx + 2 * nw, nx) = s.x_lo;
    di.segment(3 * nx + 2 * nw, nx) = -s.x_hi;
    di.segment(4 * nx + 2 * nw, nu) = s.u_lo;
    di.segment(4 * nx + 2 * nw + nu, nu) = -s.u_hi;

    Matrix Gd = Matrix::Zero(m, n);
    Gd.block(0, 0, nx, nx) = Matrix::Identity(nx, nx);
    Gd.block(nx, 0, nx, nx) = -Matrix::Identity(nx, nx);
    Gd.block(2 * nx, 0, nw, nx) = s.E;
    Gd.block(2 * nx, nx, nw, nu) = s.F;
    Gd.block(2 * nx + nw, 0, nw, nx) = -s.E;
    Gd.block(2 * nx + nw, nx, nw, nu) = -s.F;
    Gd.block(2 * nx + 2 * nw, 0, nx, nx) = Matrix::Identity(nx, nx);
    Gd.block(3 * nx + 2 * nw, 0, nx, nx) = -Matrix::Identity(nx, nx);
    Gd.block(4 * nx + 2 * nw, nx, nu, nu) = Matrix::Identity(nu, nu);
    Gd.block(4 * nx + 2 * nw + nu, nx, nu, nu) = -Matrix::Identity(nu, nu);
    lp.G_diag[i] = std::move(Gd);

    if (i > 0) {
      const StageSpec& prev = problem.stage(i - 1);
      Matrix Gs = Matrix::Zero(m, n);
      Gs.block(0, 0, nx, nx) = -prev.A;
      Gs.block(0, nx, nx, nu) = -prev.B;
      Gs.block(nx, 0, nx, nx) = prev.A;
      Gs.block(nx, nx, nx, nu) = prev.B;
      lp.G_sub[i] = std::move(Gs);
    }
  }
  lp.validate();
  return lp;
}

}  // namespace dhmpc
