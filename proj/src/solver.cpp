// Homogeneous self-dual primal-dual interior-point method for programs
//
//     minimize    c'y
//     subject to  A y  = b
//                 s    = h - G y,   s in K
//
// where K is a product of a nonnegative orthant and dense PSD cones.
// Nesterov-Todd scaling with a Mehrotra predictor-corrector step; the
// embedding carries (tau, kappa) so primal/dual infeasibility certificates
// fall out of the same iteration.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <vector>

#include "dmpc/conic.hpp"

namespace dmpc::conic {

namespace {

struct Triplet {
  int r, c;
  double v;
};

// Compiled constraint data. LP rows are kept sparse; each PSD block stores
// its constant part densely and per-variable coefficient triplets (lower
// triangle, implicit symmetry).
struct Compiled {
  int N = 0;
  Vec c;
  Mat A;  // p x N
  Vec b;
  std::vector<std::vector<std::pair<int, double>>> lp_rows;  // coefficient of y in e(y)
  Vec lp_const;
  struct Block {
    int n = 0;
    Mat F0;
    std::vector<int> vars;
    std::vector<std::vector<Triplet>> coef;  // parallel to vars
  };
  std::vector<Block> blocks;
  int lp_dim = 0;
  int cone_degree = 0;
};

Compiled compile(const Program& p) {
  Compiled cp;
  cp.N = p.num_vars();
  cp.c = Vec::Zero(cp.N);
  for (const auto& [i, v] : p.objective().terms()) cp.c(i) = v;

  const auto& eqs = p.equalities();
  cp.A = Mat::Zero(static_cast<int>(eqs.size()), cp.N);
  cp.b = Vec::Zero(static_cast<int>(eqs.size()));
  for (size_t r = 0; r < eqs.size(); ++r) {
    for (const auto& [i, v] : eqs[r].terms()) cp.A(static_cast<int>(r), i) = v;
    cp.b(static_cast<int>(r)) = -eqs[r].constant();
  }

  const auto& ineqs = p.nonnegs();
  cp.lp_rows.resize(ineqs.size());
  cp.lp_const = Vec::Zero(static_cast<int>(ineqs.size()));
  for (size_t r = 0; r < ineqs.size(); ++r) {
    cp.lp_rows[r].assign(ineqs[r].terms().begin(), ineqs[r].terms().end());
    cp.lp_const(static_cast<int>(r)) = ineqs[r].constant();
  }
  cp.lp_dim = static_cast<int>(ineqs.size());
  cp.cone_degree = cp.lp_dim;

  for (int k = 0; k < p.num_psd_blocks(); ++k) {
    const MatExpr& m = p.psd_block(k);
    Compiled::Block blk;
    blk.n = m.rows();
    blk.F0 = Mat::Zero(blk.n, blk.n);
    std::vector<std::vector<Triplet>> per_var(cp.N);
    for (int i = 0; i < blk.n; ++i)
      for (int j = 0; j <= i; ++j) {
        const LinExpr& e = m.at(i, j);
        blk.F0(i, j) = e.constant();
        blk.F0(j, i) = e.constant();
        for (const auto& [vi, cv] : e.terms()) per_var[vi].push_back({i, j, cv});
      }
    for (int vi = 0; vi < cp.N; ++vi)
      if (!per_var[vi].empty()) {
        blk.vars.push_back(vi);
        blk.coef.push_back(std::move(per_var[vi]));
      }
    cp.cone_degree += blk.n;
    cp.blocks.push_back(std::move(blk));
  }
  return cp;
}

// Cone-space vector: LP part plus one symmetric matrix per PSD block.
struct ConeVec {
  Vec lp;
  std::vector<Mat> sm;

  static ConeVec zero(const Compiled& cp) {
    ConeVec v;
    v.lp = Vec::Zero(cp.lp_dim);
    v.sm.reserve(cp.blocks.size());
    for (const auto& b : cp.blocks) v.sm.push_back(Mat::Zero(b.n, b.n));
    return v;
  }
  static ConeVec identity(const Compiled& cp) {
    ConeVec v;
    v.lp = Vec::Ones(cp.lp_dim);
    for (const auto& b : cp.blocks) v.sm.push_back(Mat::Identity(b.n, b.n));
    return v;
  }
  double dot(const ConeVec& o) const {
    double d = lp.dot(o.lp);
    for (size_t k = 0; k < sm.size(); ++k) d += sm[k].cwiseProduct(o.sm[k]).sum();
    return d;
  }
  double norm() const { return std::sqrt(dot(*this)); }
  void axpy(double a, const ConeVec& x) {
    lp += a * x.lp;
    for (size_t k = 0; k < sm.size(); ++k) sm[k] += a * x.sm[k];
  }
  void scale(double a) {
    lp *= a;
    for (auto& m : sm) m *= a;
  }
};

// h = (lp constants, F0 blocks): s(y) = h - G y.
ConeVec cone_h(const Compiled& cp) {
  ConeVec h;
  h.lp = cp.lp_const;
  for (const auto& b : cp.blocks) h.sm.push_back(b.F0);
  return h;
}

// (G y): lp rows hold -a'y, PSD blocks hold -sum_j y_j F_j.
ConeVec apply_G(const Compiled& cp, const Vec& y) {
  ConeVec out = ConeVec::zero(cp);
  for (int r = 0; r < cp.lp_dim; ++r) {
    double a = 0;
    for (const auto& [i, v] : cp.lp_rows[r]) a += v * y(i);
    out.lp(r) = -a;
  }
  for (size_t k = 0; k < cp.blocks.size(); ++k) {
    const auto& b = cp.blocks[k];
    Mat& m = out.sm[k];
    for (size_t j = 0; j < b.vars.size(); ++j) {
      const double yv = y(b.vars[j]);
      if (yv == 0.0) continue;
      for (const auto& t : b.coef[j]) {
        m(t.r, t.c) -= yv * t.v;
        if (t.r != t.c) m(t.c, t.r) -= yv * t.v;
      }
    }
  }
  return out;
}

Vec apply_GT(const Compiled& cp, const ConeVec& z) {
  Vec out = Vec::Zero(cp.N);
  for (int r = 0; r < cp.lp_dim; ++r)
    for (const auto& [i, v] : cp.lp_rows[r]) out(i) -= v * z.lp(r);
  for (size_t k = 0; k < cp.blocks.size(); ++k) {
    const auto& b = cp.blocks[k];
    const Mat& Z = z.sm[k];
    for (size_t j = 0; j < b.vars.size(); ++j) {
      double acc = 0;
      for (const auto& t : b.coef[j])
        acc += (t.r == t.c) ? t.v * Z(t.r, t.c) : 2.0 * t.v * Z(t.r, t.c);
      out(b.vars[j]) -= acc;
    }
  }
  return out;
}

// Nesterov-Todd scaling. For each PSD block R satisfies
//   R^{-1} S R^{-T} = R' Z R = diag(lam)
// so W z = R' Z R and W^{-T} s = R^{-1} S R^{-T} both land on lam.
struct Scaling {
  Vec d, lam_lp;                  // LP part
  std::vector<Mat> R, Rinv;       // per PSD block
  std::vector<Vec> lam;           // singular values per block
};

// Any square factor with S = L L' works for the NT computation; fall back to
// an eigenvalue-clamped factor when the Cholesky of a nearly singular iterate
// fails.
std::optional<Mat> robust_factor(const Mat& S) {
  Eigen::LLT<Mat> llt(S);
  if (llt.info() == Eigen::Success) return Mat(llt.matrixL());
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  if (es.info() != Eigen::Success) return std::nullopt;
  double lmax = es.eigenvalues().maxCoeff();
  if (!(lmax > 0)) return std::nullopt;
  Vec d = es.eigenvalues().cwiseMax(1e-14 * lmax).cwiseSqrt();
  return Mat(es.eigenvectors() * d.asDiagonal());
}

std::optional<Scaling> compute_scaling(const Compiled& cp, const ConeVec& s, const ConeVec& z) {
  Scaling w;
  w.d = (s.lp.array() / z.lp.array()).sqrt().matrix();
  w.lam_lp = (s.lp.array() * z.lp.array()).sqrt().matrix();
  if (!w.d.allFinite() || !w.lam_lp.allFinite()) return std::nullopt;
  for (size_t k = 0; k < cp.blocks.size(); ++k) {
    auto Ls = robust_factor(s.sm[k]);
    auto Lz = robust_factor(z.sm[k]);
    if (!Ls || !Lz) return std::nullopt;
    Eigen::JacobiSVD<Mat> svd(Lz->transpose() * (*Ls), Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec sig = svd.singularValues();
    if (sig.minCoeff() <= 0.0 || !sig.allFinite()) return std::nullopt;
    Vec isq = sig.cwiseSqrt().cwiseInverse();
    w.R.push_back((*Ls) * svd.matrixV() * isq.asDiagonal());
    w.Rinv.push_back(isq.asDiagonal() * svd.matrixU().transpose() * Lz->transpose());
    w.lam.push_back(sig);
  }
  return w;
}

Scaling identity_scaling(const Compiled& cp) {
  Scaling w;
  w.d = Vec::Ones(cp.lp_dim);
  w.lam_lp = Vec::Ones(cp.lp_dim);
  for (const auto& b : cp.blocks) {
    w.R.push_back(Mat::Identity(b.n, b.n));
    w.Rinv.push_back(Mat::Identity(b.n, b.n));
    w.lam.push_back(Vec::Ones(b.n));
  }
  return w;
}

enum class ScaleOp { W, WT, Winv, WinvT };

ConeVec apply_scaling(const Scaling& w, const ConeVec& u, ScaleOp op) {
  ConeVec out = u;
  switch (op) {
    case ScaleOp::W:
    case ScaleOp::WT:
      out.lp = w.d.cwiseProduct(u.lp);
      break;
    case ScaleOp::Winv:
    case ScaleOp::WinvT:
      out.lp = u.lp.cwiseQuotient(w.d);
      break;
  }
  for (size_t k = 0; k < u.sm.size(); ++k) {
    switch (op) {
      case ScaleOp::W: out.sm[k] = w.R[k].transpose() * u.sm[k] * w.R[k]; break;
      case ScaleOp::WT: out.sm[k] = w.R[k] * u.sm[k] * w.R[k].transpose(); break;
      case ScaleOp::Winv: out.sm[k] = w.Rinv[k].transpose() * u.sm[k] * w.Rinv[k]; break;
      case ScaleOp::WinvT: out.sm[k] = w.Rinv[k] * u.sm[k] * w.Rinv[k].transpose(); break;
    }
  }
  return out;
}

ConeVec scaling_lambda(const Compiled& cp, const Scaling& w) {
  ConeVec l = ConeVec::zero(cp);
  l.lp = w.lam_lp;
  for (size_t k = 0; k < l.sm.size(); ++k) l.sm[k] = w.lam[k].asDiagonal();
  return l;
}

// Jordan product u o v = (UV + VU)/2 on matrix blocks, elementwise on LP.
ConeVec jordan_mul(const ConeVec& u, const ConeVec& v) {
  ConeVec out = u;
  out.lp = u.lp.cwiseProduct(v.lp);
  for (size_t k = 0; k < u.sm.size(); ++k)
    out.sm[k] = 0.5 * (u.sm[k] * v.sm[k] + v.sm[k] * u.sm[k]);
  return out;
}

// lam o\ x for diagonal lam: entry (i,j) divided by (lam_i + lam_j)/2.
ConeVec jordan_div_lambda(const Scaling& w, const ConeVec& x) {
  ConeVec out = x;
  out.lp = x.lp.cwiseQuotient(w.lam_lp);
  for (size_t k = 0; k < x.sm.size(); ++k) {
    const Vec& l = w.lam[k];
    for (int i = 0; i < l.size(); ++i)
      for (int j = 0; j < l.size(); ++j) out.sm[k](i, j) = x.sm[k](i, j) * 2.0 / (l(i) + l(j));
  }
  return out;
}

// Largest t with u + t*e on the cone boundary (negated smallest eigenvalue).
double max_step(const ConeVec& u) {
  double t = u.lp.size() ? -u.lp.minCoeff() : -std::numeric_limits<double>::infinity();
  for (const auto& m : u.sm) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    t = std::max(t, -es.eigenvalues().minCoeff());
  }
  return t;
}

// Step limit for lam + t*dir >= 0 with diagonal lam: negated smallest
// eigenvalue of lam^{-1/2} dir lam^{-1/2}.
double max_step_scaled(const Scaling& w, const ConeVec& dir) {
  double t = -std::numeric_limits<double>::infinity();
  if (dir.lp.size()) t = std::max(t, (-dir.lp.array() / w.lam_lp.array()).maxCoeff());
  for (size_t k = 0; k < dir.sm.size(); ++k) {
    Vec il = w.lam[k].cwiseSqrt().cwiseInverse();
    Mat m = il.asDiagonal() * dir.sm[k] * il.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    t = std::max(t, -es.eigenvalues().minCoeff());
  }
  return t;
}

// KKT operator with the (3,3) block -W'W; factorized per iteration through
// the Schur complement M = G'(W'W)^{-1}G.
class KktSolver {
 public:
  KktSolver(const Compiled& cp, const Scaling& w, int refine) : cp_(cp), w_(w), refine_(refine) {}

  bool factor() {
    const int N = cp_.N;
    Mat M = Mat::Zero(N, N);
    // LP rows contribute (a a')/d^2.
    for (int r = 0; r < cp_.lp_dim; ++r) {
      const double wi = 1.0 / (w_.d(r) * w_.d(r));
      for (const auto& [i, vi] : cp_.lp_rows[r])
        for (const auto& [j, vj] : cp_.lp_rows[r]) M(i, j) += wi * vi * vj;
    }
    // PSD blocks contribute <Ftil_i, Ftil_j> with Ftil = Rinv F Rinv'.
    scaled_.assign(cp_.blocks.size(), {});
    for (size_t k = 0; k < cp_.blocks.size(); ++k) {
      const auto& b = cp_.blocks[k];
      const Mat& Ri = w_.Rinv[k];
      auto& ft = scaled_[k];
      ft.resize(b.vars.size());
      for (size_t j = 0; j < b.vars.size(); ++j) {
        Mat f = Mat::Zero(b.n, b.n);
        for (const auto& t : b.coef[j]) {
          f.noalias() += t.v * (Ri.col(t.r) * Ri.col(t.c).transpose());
          if (t.r != t.c) f.noalias() += t.v * (Ri.col(t.c) * Ri.col(t.r).transpose());
        }
        ft[j] = std::move(f);
      }
      for (size_t a = 0; a < b.vars.size(); ++a)
        for (size_t c = 0; c <= a; ++c) {
          double v = ft[a].cwiseProduct(ft[c]).sum();
          M(b.vars[a], b.vars[c]) += v;
          if (a != c) M(b.vars[c], b.vars[a]) += v;
        }
    }
    // Quasi-definite KKT [[M+dI, A'],[A, -dI]] admits a stable LDL'.
    const int p = static_cast<int>(cp_.A.rows());
    delta_ = 1e-13 * std::max(1.0, M.diagonal().maxCoeff());
    for (int attempt = 0; attempt < 5; ++attempt) {
      Mat K = Mat::Zero(N + p, N + p);
      K.topLeftCorner(N, N) = M + delta_ * Mat::Identity(N, N);
      if (p > 0) {
        K.topRightCorner(N, p) = cp_.A.transpose();
        K.bottomLeftCorner(p, N) = cp_.A;
        K.bottomRightCorner(p, p) = -delta_ * Mat::Identity(p, p);
      }
      ldlt_.compute(K);
      if (ldlt_.info() == Eigen::Success && ldlt_.vectorD().allFinite() &&
          ldlt_.vectorD().cwiseAbs().minCoeff() > 0)
        break;
      delta_ *= 1e3;
      if (attempt == 4) return false;
    }
    return true;
  }

  // Solves [0 A' G'; A 0 0; G 0 -W'W] [ux;uy;uz] = [bx;by;bz].
  void solve(const Vec& bx, const Vec& by, const ConeVec& bz, Vec& ux, Vec& uy,
             ConeVec& uz) const {
    solve_once(bx, by, bz, ux, uy, uz);
    for (int it = 0; it < refine_; ++it) {
      Vec r1 = bx - apply_GT(cp_, uz);
      if (cp_.A.rows() > 0) r1 -= cp_.A.transpose() * uy;
      Vec r2 = by;
      if (cp_.A.rows() > 0) r2 -= cp_.A * ux;
      ConeVec gz = apply_G(cp_, ux);
      ConeVec wwuz = apply_scaling(w_, apply_scaling(w_, uz, ScaleOp::W), ScaleOp::WT);
      ConeVec r3 = bz;
      r3.axpy(-1.0, gz);
      r3.axpy(1.0, wwuz);
      if (debug_refine)
        std::printf("    refine %d: |r1|=%.3e |r2|=%.3e |r3|=%.3e\n", it, r1.norm(),
                    r2.size() ? r2.norm() : 0.0, r3.norm());
      Vec cx, cy;
      ConeVec cz;
      solve_once(r1, r2, r3, cx, cy, cz);
      ux += cx;
      if (uy.size()) uy += cy;
      uz.axpy(1.0, cz);
    }
  }

  static inline bool debug_refine = false;

 private:
  void solve_once(const Vec& bx, const Vec& by, const ConeVec& bz, Vec& ux, Vec& uy,
                  ConeVec& uz) const {
    const int N = cp_.N;
    const int p = static_cast<int>(cp_.A.rows());
    ConeVec bzt = apply_scaling(w_, bz, ScaleOp::WinvT);
    // Eliminating uz leaves [[M, A'],[A, 0]] [ux;uy] = [bx + G~' bzt; by].
    Vec rhs(N + p);
    rhs.head(N) = bx - apply_GT_scaled(bzt);
    if (p > 0) rhs.tail(p) = by;
    Vec sol = ldlt_.solve(rhs);
    ux = sol.head(N);
    uy = p > 0 ? Vec(sol.tail(p)) : Vec();
    // uz = W^{-1}(G~ ux - bzt)
    ConeVec gx = apply_G_scaled(ux);
    gx.axpy(-1.0, bzt);
    uz = apply_scaling(w_, gx, ScaleOp::Winv);
  }

  // W^{-T} G y computed blockwise with the precomputed scaled coefficients.
  ConeVec apply_G_scaled(const Vec& y) const {
    ConeVec out = ConeVec::zero(cp_);
    for (int r = 0; r < cp_.lp_dim; ++r) {
      double a = 0;
      for (const auto& [i, v] : cp_.lp_rows[r]) a += v * y(i);
      out.lp(r) = -a / w_.d(r);
    }
    for (size_t k = 0; k < cp_.blocks.size(); ++k) {
      const auto& b = cp_.blocks[k];
      for (size_t j = 0; j < b.vars.size(); ++j) {
        const double yv = y(b.vars[j]);
        if (yv != 0.0) out.sm[k] -= yv * scaled_[k][j];
      }
    }
    return out;
  }

  // (W^{-T} G)' z.
  Vec apply_GT_scaled(const ConeVec& z) const {
    Vec out = Vec::Zero(cp_.N);
    for (int r = 0; r < cp_.lp_dim; ++r)
      for (const auto& [i, v] : cp_.lp_rows[r]) out(i) -= v * z.lp(r) / w_.d(r);
    for (size_t k = 0; k < cp_.blocks.size(); ++k) {
      const auto& b = cp_.blocks[k];
      for (size_t j = 0; j < b.vars.size(); ++j)
        out(b.vars[j]) -= scaled_[k][j].cwiseProduct(z.sm[k]).sum();
    }
    return out;
  }

  const Compiled& cp_;
  const Scaling& w_;
  int refine_;
  double delta_ = 0.0;
  Eigen::LDLT<Mat> ldlt_;
  std::vector<std::vector<Mat>> scaled_;
};

struct Residuals {
  Vec rx;      // A'y + G'z + c*tau
  Vec ry;      // A x - b*tau
  ConeVec rz;  // G x + s - h*tau
  double rtau; // -c'x - b'y - h'z - kappa
};

double cone_violation(const Compiled& cp, const Vec& y) {
  double v = 0.0;
  ConeVec s = cone_h(cp);  // s(y) = h - G y
  s.axpy(-1.0, apply_G(cp, y));
  for (int r = 0; r < cp.lp_dim; ++r) v = std::max(v, -s.lp(r));
  for (const auto& m : s.sm) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    v = std::max(v, -es.eigenvalues().minCoeff());
  }
  if (cp.A.rows() > 0) v = std::max(v, (cp.A * y - cp.b).cwiseAbs().maxCoeff());
  return v;
}

}  // namespace

SolveResult solve_compiled(const Program& prog, const SolverOptions& opts) {
  Compiled cp = compile(prog);
  SolveResult res;
  res.y = Vec::Zero(cp.N);
  if (cp.N == 0 || (cp.lp_dim == 0 && cp.blocks.empty()))
    throw EmptyProgram("conic program needs at least one variable and one cone constraint");

  const ConeVec h = cone_h(cp);
  const ConeVec e = ConeVec::identity(cp);
  const double normb = std::max(1.0, cp.b.size() ? cp.b.norm() : 0.0);
  const double normh = std::max(1.0, h.norm());
  const double normc = std::max(1.0, cp.c.norm());
  const int p = static_cast<int>(cp.A.rows());

  // Initial point from two least-norm solves with W = I.
  Scaling wI = identity_scaling(cp);
  KktSolver kkt0(cp, wI, opts.refine_steps);
  if (!kkt0.factor()) {
    res.status = Status::NumericalFailure;
    return res;
  }
  Vec x, y0;
  ConeVec z0;
  kkt0.solve(Vec::Zero(cp.N), cp.b, h, x, y0, z0);
  ConeVec s = z0;
  s.scale(-1.0);
  double ts = max_step(s);
  if (ts >= -1e-8 * std::max(s.norm(), 1.0)) s.axpy(1.0 + ts, e);

  Vec xd, y;
  ConeVec z;
  kkt0.solve(-cp.c, Vec::Zero(p), ConeVec::zero(cp), xd, y, z);
  double tz = max_step(z);
  if (tz >= -1e-8 * std::max(z.norm(), 1.0)) z.axpy(1.0 + tz, e);
  if (p == 0) y = Vec();

  double tau = 1.0, kappa = 1.0;
  const double deg = cp.cone_degree + 1;

  auto residuals = [&](const Vec& xx, const Vec& yy, const ConeVec& zz, const ConeVec& ss,
                       double tt, double kk) {
    Residuals r;
    r.rx = apply_GT(cp, zz) + cp.c * tt;
    if (p > 0) r.rx += cp.A.transpose() * yy;
    r.ry = p > 0 ? Vec(cp.A * xx - cp.b * tt) : Vec();
    r.rz = apply_G(cp, xx);
    r.rz.axpy(1.0, ss);
    r.rz.axpy(-tt, h);
    r.rtau = -cp.c.dot(xx) - (p > 0 ? cp.b.dot(yy) : 0.0) - h.dot(zz) - kk;
    return r;
  };

  auto finish = [&](Status st, const Vec& xx, const Vec& yy, const ConeVec& zz, double tt,
                    int iters) {
    res.status = st;
    res.iterations = iters;
    if (tt > 0) {
      res.y = xx / tt;
      res.objective = cp.c.dot(res.y);
      res.dual_objective = -((p > 0 ? cp.b.dot(yy) : 0.0) + h.dot(zz)) / tt;
      res.gap = std::abs(res.objective - res.dual_objective);
      res.max_violation = cone_violation(cp, res.y);
    }
    return res;
  };

  struct Snapshot {
    Vec x, y;
    ConeVec z;
    double tau = 1.0;
    double score = std::numeric_limits<double>::infinity();
    int iter = 0;
  } best;

  int iters = 0;
  for (; iters <= opts.max_iter; ++iters) {
    Residuals r = residuals(x, y, z, s, tau, kappa);
    const double gap = s.dot(z) / (tau * tau);
    const double pcost = cp.c.dot(x) / tau;
    const double dcost = -((p > 0 ? cp.b.dot(y) : 0.0) + h.dot(z)) / tau;
    const double pres =
        std::max(p > 0 ? r.ry.norm() / normb : 0.0, r.rz.norm() / normh) / tau;
    const double dres = r.rx.norm() / normc / tau;
    double relgap = std::numeric_limits<double>::infinity();
    if (pcost < 0)
      relgap = gap / -pcost;
    else if (dcost > 0)
      relgap = gap / dcost;

    if (opts.verbose)
      std::printf("%2d: pcost=% .6e dcost=% .6e gap=%.2e pres=%.2e dres=%.2e tau=%.2e kap=%.2e\n",
                  iters, pcost, dcost, gap, pres, dres, tau, kappa);

    const double score =
        std::max({pres / opts.feas_tol, dres / opts.feas_tol,
                  std::min(gap / opts.gap_tol, relgap / (10 * opts.gap_tol)), 0.0});
    if (score < best.score) best = {x, y, z, tau, score, iters};

    if (pres <= opts.feas_tol && dres <= opts.feas_tol &&
        (gap <= opts.gap_tol || relgap <= opts.gap_tol * 10)) {
      res = finish(Status::Optimal, x, y, z, tau, iters);
      res.gap = gap;
      return res;
    }
    // Primal infeasibility certificate: A'y + G'z = 0, h'z + b'y = -1, z >= 0.
    const double hzby = h.dot(z) + (p > 0 ? cp.b.dot(y) : 0.0);
    if (hzby < 0) {
      Vec cert = apply_GT(cp, z);
      if (p > 0) cert += cp.A.transpose() * y;
      if (cert.norm() / normc / (-hzby) <= opts.feas_tol) {
        res = finish(Status::Infeasible, x, y, z, 0.0, iters);
        res.status = Status::Infeasible;
        return res;
      }
    }
    // Dual infeasibility (primal unbounded): G x + s = 0, A x = 0, c'x = -1.
    const double ctx = cp.c.dot(x);
    if (ctx < 0) {
      ConeVec gxs = apply_G(cp, x);
      gxs.axpy(1.0, s);
      double nr = std::max(gxs.norm() / normh, p > 0 ? (cp.A * x).norm() / normb : 0.0);
      if (nr / (-ctx) <= opts.feas_tol) {
        res = finish(Status::Unbounded, x, y, z, 0.0, iters);
        res.status = Status::Unbounded;
        return res;
      }
    }
    if (iters == opts.max_iter) break;

    auto fail = [&](Status st) { return finish(st, best.x, best.y, best.z, best.tau, iters); };

    KktSolver::debug_refine = opts.verbose && iters >= 28 && iters <= 31;
    auto wopt = compute_scaling(cp, s, z);
    if (!wopt) return fail(Status::NumericalFailure);
    Scaling& w = *wopt;
    ConeVec lam = scaling_lambda(cp, w);
    const double mu = (s.dot(z) + tau * kappa) / deg;

    KktSolver kkt(cp, w, opts.refine_steps);
    if (!kkt.factor()) return fail(Status::NumericalFailure);

    // th1 = K^{-1} [-c; b; h], shared by both corrector passes.
    Vec x1, y1;
    ConeVec z1;
    kkt.solve(-cp.c, cp.b, h, x1, y1, z1);
    const double dg_den =
        kappa / tau - (cp.c.dot(x1) + (p > 0 ? cp.b.dot(y1) : 0.0) + h.dot(z1));

    auto direction = [&](const ConeVec& dsc, double dkc, Vec& dx, Vec& dy, ConeVec& dz,
                         ConeVec& dsv, double& dtau, double& dkap) {
      ConeVec wld = apply_scaling(w, jordan_div_lambda(w, dsc), ScaleOp::WT);
      ConeVec bz = r.rz;
      bz.scale(-1.0);
      bz.axpy(-1.0, wld);
      Vec x2, y2;
      ConeVec z2;
      kkt.solve(-r.rx, p > 0 ? Vec(-r.ry) : Vec(), bz, x2, y2, z2);
      double num = -r.rtau + dkc / tau + cp.c.dot(x2) + (p > 0 ? cp.b.dot(y2) : 0.0) +
                   h.dot(z2);
      dtau = num / dg_den;
      dx = x2 + dtau * x1;
      if (p > 0)
        dy = y2 + dtau * y1;
      else
        dy = Vec();
      dz = z2;
      dz.axpy(dtau, z1);
      // ds = W'(lam o\ dsc) - W'W dz
      dsv = wld;
      ConeVec wwdz = apply_scaling(w, apply_scaling(w, dz, ScaleOp::W), ScaleOp::WT);
      dsv.axpy(-1.0, wwdz);
      dkap = (dkc - kappa * dtau) / tau;
    };

    // Affine (predictor) direction.
    ConeVec ds_aff = jordan_mul(lam, lam);
    ds_aff.scale(-1.0);
    double dk_aff = -tau * kappa;
    Vec dxa, dya;
    ConeVec dza, dsa;
    double dta, dka;
    direction(ds_aff, dk_aff, dxa, dya, dza, dsa, dta, dka);

    ConeVec dsa_sc = apply_scaling(w, dsa, ScaleOp::WinvT);
    ConeVec dza_sc = apply_scaling(w, dza, ScaleOp::W);
    double t = std::max({0.0, max_step_scaled(w, dsa_sc), max_step_scaled(w, dza_sc),
                         -dta / tau, -dka / kappa});
    double step_aff = t <= 0 ? 1.0 : std::min(1.0, 1.0 / t);
    double sigma = std::pow(1.0 - step_aff, 3.0);

    // Combined direction with Mehrotra correction.
    ConeVec dsc = jordan_mul(lam, lam);
    dsc.scale(-1.0);
    ConeVec corr = jordan_mul(dsa_sc, dza_sc);
    dsc.axpy(-1.0, corr);
    dsc.axpy(sigma * mu, e);
    double dkc = -tau * kappa - dta * dka + sigma * mu;
    Vec dx, dy;
    ConeVec dz, dsv;
    double dtau, dkap;
    direction(dsc, dkc, dx, dy, dz, dsv, dtau, dkap);

    ConeVec ds_sc = apply_scaling(w, dsv, ScaleOp::WinvT);
    ConeVec dz_sc = apply_scaling(w, dz, ScaleOp::W);
    t = std::max({0.0, max_step_scaled(w, ds_sc), max_step_scaled(w, dz_sc), -dtau / tau,
                  -dkap / kappa});
    double step = t <= 0 ? 1.0 : std::min(1.0, 0.99 / t);
    if (!std::isfinite(step) || step <= 1e-14) return fail(Status::NumericalFailure);

    x += step * dx;
    if (p > 0) y += step * dy;
    z.axpy(step, dz);
    s.axpy(step, dsv);
    tau += step * dtau;
    kappa += step * dkap;
    if (tau <= 0 || kappa < 0) return fail(Status::NumericalFailure);
  }
  return finish(Status::MaxIterations, best.x, best.y, best.z, best.tau, opts.max_iter);
}

}  // namespace dmpc::conic
