#include "dmpc/model.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace dmpc::model {

int PartitionedSystem::block_offset(int i, int j) const {
  int off = 0;
  for (int k : neighbors[i]) {
    if (k == j) return off;
    off += nx[k];
  }
  throw Error("subsystem " + std::to_string(j) + " is not in neighborhood " + std::to_string(i));
}

bool PartitionedSystem::in_neighborhood(int i, int j) const {
  return std::binary_search(neighbors[i].begin(), neighbors[i].end(), j);
}

Vec PartitionedSystem::neighborhood_state(int i, const Vec& x) const {
  Vec out(nn(i));
  for (int k = 0; k < nn(i); ++k) out(k) = x(w_cols[i][k]);
  return out;
}

PartitionedSystem build_partitioned_system(const Mat& A, const Mat& B,
                                           const std::vector<std::pair<int, int>>& partition,
                                           const std::vector<std::vector<int>>& neighbors) {
  PartitionedSystem s;
  s.M = static_cast<int>(partition.size());
  if (neighbors.size() != partition.size())
    throw DimensionMismatch("partition and neighbor lists differ in length");
  for (auto [ni, mi] : partition) {
    s.x_offset.push_back(s.n);
    s.u_offset.push_back(s.m);
    s.nx.push_back(ni);
    s.nu.push_back(mi);
    s.n += ni;
    s.m += mi;
  }
  if (A.rows() != s.n || A.cols() != s.n || B.rows() != s.n || B.cols() != s.m)
    throw DimensionMismatch("A/B dimensions do not match the partition");
  s.A = A;
  s.B = B;
  s.neighbors = neighbors;
  for (int i = 0; i < s.M; ++i) {
    auto& ns = s.neighbors[i];
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    if (!std::binary_search(ns.begin(), ns.end(), i))
      throw StructureViolation("neighbor set of subsystem " + std::to_string(i) +
                               " must contain the subsystem itself");
    if (ns.front() < 0 || ns.back() >= s.M)
      throw DimensionMismatch("neighbor index out of range");
  }

  for (int i = 0; i < s.M; ++i) {
    std::vector<int> cols;
    for (int j : s.neighbors[i])
      for (int k = 0; k < s.nx[j]; ++k) cols.push_back(s.x_offset[j] + k);
    s.w_cols.push_back(cols);

    Mat Ui = Mat::Zero(s.nx[i], s.n);
    for (int k = 0; k < s.nx[i]; ++k) Ui(k, s.x_offset[i] + k) = 1.0;
    Mat Wi = Mat::Zero(static_cast<int>(cols.size()), s.n);
    for (size_t k = 0; k < cols.size(); ++k) Wi(static_cast<int>(k), cols[k]) = 1.0;
    Mat Vi = Mat::Zero(s.nu[i], s.m);
    for (int k = 0; k < s.nu[i]; ++k) Vi(k, s.u_offset[i] + k) = 1.0;
    s.U.push_back(Ui);
    s.W.push_back(Wi);
    s.V.push_back(Vi);
  }

  // Declared sparsity: rows of block i may touch only neighborhood columns,
  // and B may not couple inputs across subsystems.
  for (int i = 0; i < s.M; ++i) {
    std::vector<bool> allowed(s.n, false);
    for (int c : s.w_cols[i]) allowed[c] = true;
    for (int r = 0; r < s.nx[i]; ++r)
      for (int c = 0; c < s.n; ++c)
        if (!allowed[c] && A(s.x_offset[i] + r, c) != 0.0)
          throw StructureViolation("A couples subsystem " + std::to_string(i) +
                                   " to a state outside its declared neighborhood");
    for (int r = 0; r < s.nx[i]; ++r)
      for (int c = 0; c < s.m; ++c) {
        bool own = c >= s.u_offset[i] && c < s.u_offset[i] + s.nu[i];
        if (!own && B(s.x_offset[i] + r, c) != 0.0)
          throw StructureViolation("B couples subsystems through inputs");
      }
    s.A_i.push_back(s.U[i] * A * s.W[i].transpose());
    s.B_i.push_back(s.U[i] * B * s.V[i].transpose());
  }

  // Block extraction must reproduce the global map on random vectors.
  std::mt19937 rng(0x5eed);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 4; ++trial) {
    Vec x(s.n);
    for (int k = 0; k < s.n; ++k) x(k) = nd(rng);
    Vec ax = A * x;
    for (int i = 0; i < s.M; ++i) {
      Vec lhs = s.A_i[i] * s.neighborhood_state(i, x);
      Vec rhs = s.U[i] * ax;
      if ((lhs - rhs).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, ax.cwiseAbs().maxCoeff()))
        throw StructureViolation("block extraction mismatch for subsystem " + std::to_string(i));
    }
  }
  return s;
}

Polytope scale_polytope(const Polytope& p, double factor) {
  if (!(factor > 0.0) || factor > 1.0)
    throw InvalidFactor("scaling factor must lie in (0, 1]");
  return {p.F, factor * p.f};
}

PolytopicConstraints decompose_constraints(const PartitionedSystem& sys, const Mat& G,
                                           const Vec& g, const Mat& H, const Vec& h) {
  if (G.cols() != sys.n || H.cols() != sys.m || G.rows() != g.size() || H.rows() != h.size())
    throw DimensionMismatch("constraint matrix dimensions");
  PolytopicConstraints c;
  c.G = G;
  c.g = g;
  c.H = H;
  c.h = h;
  c.G_i.resize(sys.M);
  c.g_i.resize(sys.M);
  c.H_i.resize(sys.M);
  c.h_i.resize(sys.M);

  for (int i = 0; i < sys.M; ++i) {
    std::vector<int> rows;
    std::vector<bool> inside(sys.n, false);
    for (int cidx : sys.w_cols[i]) inside[cidx] = true;
    for (int r = 0; r < G.rows(); ++r) {
      bool covered = true;
      for (int cidx = 0; cidx < sys.n; ++cidx)
        if (G(r, cidx) != 0.0 && !inside[cidx]) covered = false;
      if (covered) rows.push_back(r);
    }
    Mat Gi(static_cast<int>(rows.size()), sys.nn(i));
    Vec gi(static_cast<int>(rows.size()));
    for (size_t k = 0; k < rows.size(); ++k) {
      for (int cidx = 0; cidx < sys.nn(i); ++cidx) Gi(static_cast<int>(k), cidx) = G(rows[k], sys.w_cols[i][cidx]);
      gi(static_cast<int>(k)) = g(rows[k]);
    }
    c.G_i[i] = Gi;
    c.g_i[i] = gi;
  }
  // Every state row must fit inside at least one neighborhood.
  for (int r = 0; r < G.rows(); ++r) {
    bool covered = false;
    for (int i = 0; i < sys.M && !covered; ++i) {
      bool ok = true;
      std::vector<bool> inside(sys.n, false);
      for (int cidx : sys.w_cols[i]) inside[cidx] = true;
      for (int cidx = 0; cidx < sys.n; ++cidx)
        if (G(r, cidx) != 0.0 && !inside[cidx]) ok = false;
      covered = ok;
    }
    if (!covered)
      throw StructureViolation("state constraint row " + std::to_string(r) +
                               " spans more than one neighborhood");
  }

  for (int i = 0; i < sys.M; ++i) {
    std::vector<int> rows;
    for (int r = 0; r < H.rows(); ++r) {
      bool own = false, foreign = false;
      for (int cidx = 0; cidx < sys.m; ++cidx)
        if (H(r, cidx) != 0.0) {
          bool mine = cidx >= sys.u_offset[i] && cidx < sys.u_offset[i] + sys.nu[i];
          (mine ? own : foreign) = true;
        }
      if (own && foreign)
        throw StructureViolation("input constraint row " + std::to_string(r) +
                                 " couples several subsystems");
      if (own) rows.push_back(r);
    }
    Mat Hi(static_cast<int>(rows.size()), sys.nu[i]);
    Vec hi(static_cast<int>(rows.size()));
    for (size_t k = 0; k < rows.size(); ++k) {
      for (int cidx = 0; cidx < sys.nu[i]; ++cidx)
        Hi(static_cast<int>(k), cidx) = H(rows[k], sys.u_offset[i] + cidx);
      hi(static_cast<int>(k)) = h(rows[k]);
    }
    c.H_i[i] = Hi;
    c.h_i[i] = hi;
  }
  return c;
}

Mat CostWeights::global_Q(const PartitionedSystem& sys) const {
  Mat q = Mat::Zero(sys.n, sys.n);
  for (int i = 0; i < sys.M; ++i) q += sys.W[i].transpose() * Q[i] * sys.W[i];
  return q;
}

Mat CostWeights::global_R(const PartitionedSystem& sys) const {
  Mat r = Mat::Zero(sys.m, sys.m);
  for (int i = 0; i < sys.M; ++i) r += sys.V[i].transpose() * R[i] * sys.V[i];
  return r;
}

Mat CostWeights::global_S(const PartitionedSystem& sys) const {
  Mat s = Mat::Zero(sys.n, sys.n);
  for (int i = 0; i < sys.M; ++i) s += sys.U[i].transpose() * S[i] * sys.U[i];
  return s;
}

bool ValidationReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks)
    os << (c.pass ? "[ ok ] " : "[FAIL] ") << c.name << (c.detail.empty() ? "" : ": " + c.detail)
       << "\n";
  return os.str();
}

namespace {

ValidationCheck check_stabilizable(const PartitionedSystem& sys) {
  Eigen::EigenSolver<Mat> es(sys.A);
  const double scale = std::max(1.0, sys.A.cwiseAbs().maxCoeff());
  for (int k = 0; k < sys.n; ++k) {
    std::complex<double> lam = es.eigenvalues()(k);
    if (std::abs(lam) <= 1.0 + 1e-9) continue;
    Eigen::MatrixXcd pbh(sys.n, sys.n + sys.m);
    pbh.leftCols(sys.n) = sys.A.cast<std::complex<double>>() -
                          lam * Eigen::MatrixXcd::Identity(sys.n, sys.n);
    pbh.rightCols(sys.m) = sys.B.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
    double smin = svd.singularValues().minCoeff();
    if (smin <= 1e-8 * std::max(scale, svd.singularValues().maxCoeff())) {
      std::ostringstream os;
      os << "PBH rank drop at eigenvalue " << lam.real();
      if (lam.imag() != 0.0) os << (lam.imag() > 0 ? "+" : "") << lam.imag() << "i";
      return {"stabilizability", false, os.str()};
    }
  }
  return {"stabilizability", true, ""};
}

ValidationCheck check_weights(const PartitionedSystem& sys, const CostWeights& w,
                              bool require_pd_q) {
  auto bad = [](const Mat& m, double floor_ev) {
    return !is_symmetric(m, 1e-10) || min_eigenvalue(m) <= floor_ev;
  };
  for (int i = 0; i < sys.M; ++i) {
    if (bad(w.Q[i], require_pd_q ? 1e-10 : -1e-10))
      return {"weights-positive-definite", false, "Q block " + std::to_string(i)};
    if (bad(w.R[i], 1e-10))
      return {"weights-positive-definite", false, "R block " + std::to_string(i)};
    if (bad(w.S[i], 1e-10))
      return {"weights-positive-definite", false, "S block " + std::to_string(i)};
  }
  return {"weights-positive-definite", true, ""};
}

ValidationCheck check_target(const PartitionedSystem& sys, const PolytopicConstraints& con,
                             const TargetPoint& t) {
  if (t.x_r.size() != sys.n) return {"target-admissible", false, "dimension"};
  Vec rhs = t.x_r - sys.A * t.x_r;
  Vec u_r = sys.B.completeOrthogonalDecomposition().solve(rhs);
  double resid = (sys.B * u_r - rhs).cwiseAbs().maxCoeff();
  if (resid > 1e-8)
    return {"target-admissible", false, "no equilibrium input (residual " +
                                            std::to_string(resid) + ")"};
  const double margin = 1e-9;
  if (con.G.rows() > 0) {
    Vec sg = con.g - con.G * t.x_r;
    if (sg.minCoeff() <= margin) return {"target-admissible", false, "x_r not strictly interior"};
  }
  if (con.H.rows() > 0) {
    Vec sh = con.h - con.H * u_r;
    if (sh.minCoeff() <= margin) return {"target-admissible", false, "u_r not strictly interior"};
  }
  return {"target-admissible", true, ""};
}

}  // namespace

ValidationReport validate_assumptions(const PartitionedSystem& sys,
                                      const PolytopicConstraints& con, const CostWeights& w,
                                      const TargetPoint& target, bool require_pd_q) {
  ValidationReport rep;
  rep.checks.push_back(check_stabilizable(sys));
  rep.checks.push_back(check_weights(sys, w, require_pd_q));
  rep.checks.push_back(check_target(sys, con, target));
  return rep;
}

double global_stage_cost(const PartitionedSystem& sys, const CostWeights& w, const Vec& x,
                         const Vec& u, const Vec& xe, const Vec& ue) {
  Vec dx = x - xe, du = u - ue;
  return dx.dot(w.global_Q(sys) * dx) + du.dot(w.global_R(sys) * du);
}

double local_stage_cost_sum(const PartitionedSystem& sys, const CostWeights& w, const Vec& x,
                            const Vec& u, const Vec& xe, const Vec& ue) {
  double j = 0;
  for (int i = 0; i < sys.M; ++i) {
    Vec dxn = sys.neighborhood_state(i, x - xe);
    Vec dui = sys.V[i] * (u - ue);
    j += dxn.dot(w.Q[i] * dxn) + dui.dot(w.R[i] * dui);
  }
  return j;
}

}  // namespace dmpc::model
