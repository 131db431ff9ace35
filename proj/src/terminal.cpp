#include "dmpc/terminal.hpp"

#include <cmath>
#include <limits>

namespace dmpc::terminal {

using conic::LinExpr;
using conic::MatExpr;

VarChangeVars forward_map(const TerminalIngredients& ti, const model::PartitionedSystem& sys) {
  for (int i = 0; i < sys.M; ++i)
    if (!(ti.alpha(i) > 0.0))
      throw NonpositiveAlpha("alpha_" + std::to_string(i) + " must be positive");
  Vec c_global(sys.n);
  for (int i = 0; i < sys.M; ++i) c_global.segment(sys.x_offset[i], sys.nx[i]) = ti.c[i];

  VarChangeVars v;
  for (int i = 0; i < sys.M; ++i) {
    Vec v1(sys.nn(i));
    for (int j : sys.neighbors[i])
      v1.segment(sys.block_offset(i, j), sys.nx[j]).setConstant(std::sqrt(ti.alpha(j)));
    Vec v2 = sys.neighborhood_state(i, c_global);
    Mat v3 = ti.K[i] * v1.asDiagonal();
    Vec v4 = ti.K[i] * v2 + ti.d[i];
    Mat v5 = v1.asDiagonal() * ti.Gamma[i] * v1.asDiagonal() / std::sqrt(ti.alpha(i));
    v.v1.push_back(std::move(v1));
    v.v2.push_back(std::move(v2));
    v.v3.push_back(std::move(v3));
    v.v4.push_back(std::move(v4));
    v.v5.push_back(symmetrize(v5));
  }
  return v;
}

TerminalIngredients inverse_map(const VarChangeVars& v, const model::PartitionedSystem& sys) {
  TerminalIngredients ti;
  ti.alpha = Vec::Constant(sys.M, -1.0);
  Vec c_global = Vec::Constant(sys.n, std::numeric_limits<double>::quiet_NaN());

  for (int i = 0; i < sys.M; ++i) {
    for (int j : sys.neighbors[i]) {
      const int off = sys.block_offset(i, j);
      for (int k = 0; k < sys.nx[j]; ++k) {
        double a1 = v.v1[i](off + k);
        if (!(a1 > 0.0)) throw SingularV1("v1 must be positive diagonal");
        double aj = a1 * a1;
        if (ti.alpha(j) < 0)
          ti.alpha(j) = aj;
        else if (std::abs(ti.alpha(j) - aj) > 1e-8 * std::max(1.0, ti.alpha(j)))
          throw InconsistentSharedAlpha("alpha_" + std::to_string(j) +
                                        " disagrees across neighborhoods");
        double cj = v.v2[i](off + k);
        double& slot = c_global(sys.x_offset[j] + k);
        if (std::isnan(slot))
          slot = cj;
        else if (std::abs(slot - cj) > 1e-8 * std::max(1.0, std::abs(slot)))
          throw InconsistentSharedAlpha("center of subsystem " + std::to_string(j) +
                                        " disagrees across neighborhoods");
      }
    }
  }
  for (int i = 0; i < sys.M; ++i) {
    Mat v1inv = v.v1[i].cwiseInverse().asDiagonal();
    Mat K = v.v3[i] * v1inv;
    Vec d = v.v4[i] - K * v.v2[i];
    double a_i = v.v1[i](sys.block_offset(i, i));
    Mat gamma = v1inv * v.v5[i] * v1inv * a_i;
    ti.c.push_back(c_global.segment(sys.x_offset[i], sys.nx[i]));
    ti.K.push_back(std::move(K));
    ti.d.push_back(std::move(d));
    ti.Gamma.push_back(symmetrize(gamma));
  }
  return ti;
}

Mat neighbor_embedding(const model::PartitionedSystem& sys, const std::vector<Mat>& P, int i,
                       int j) {
  Mat m = Mat::Zero(sys.nn(i), sys.nn(i));
  int off = sys.block_offset(i, j);
  m.block(off, off, sys.nx[j], sys.nx[j]) = P[j];
  return m;
}

namespace {

// sum_j mult_j * P_{ij} as a MatExpr (multipliers are scalar expressions).
MatExpr multiplier_mix(const model::PartitionedSystem& sys, const std::vector<Mat>& P, int i,
                       const std::vector<LinExpr>& mult) {
  MatExpr acc(sys.nn(i), sys.nn(i));
  for (size_t b = 0; b < mult.size(); ++b) {
    Mat pij = neighbor_embedding(sys, P, i, sys.neighbors[i][b]);
    for (int r = 0; r < pij.rows(); ++r)
      for (int c = 0; c < pij.cols(); ++c)
        if (pij(r, c) != 0.0) acc.at(r, c) += mult[b] * pij(r, c);
  }
  return acc;
}

LinExpr multiplier_sum(const std::vector<LinExpr>& mult) {
  LinExpr s;
  for (const auto& m : mult) s += m;
  return s;
}

}  // namespace

MatExpr membership_lmi(const model::PartitionedSystem& sys, const std::vector<Mat>& E, int i,
                       const conic::MatExpr& x_term, const SubsystemVars& v) {
  const int ni = sys.nx[i];
  MatExpr m(ni + 1, ni + 1);
  MatExpr pa(ni, ni);
  for (int r = 0; r < ni; ++r)
    for (int c = 0; c < ni; ++c)
      if (E[i](r, c) != 0.0) pa.at(r, c) = v.a_i * E[i](r, c);
  m.set_block(0, 0, pa);
  MatExpr dc = x_term - v.ci;
  m.set_block(0, ni, dc);
  m.set_block(ni, 0, dc.transpose());
  m.at(ni, ni) = v.a_i;
  return m;
}

MatExpr invariance_lmi(const model::PartitionedSystem& sys, const std::vector<Mat>& P,
                       const std::vector<Mat>& E, int i, const SubsystemVars& v,
                       const std::vector<LinExpr>& mu) {
  const int ni = sys.nx[i], nn = sys.nn(i);
  MatExpr m(ni + nn + 1, ni + nn + 1);
  MatExpr pa(ni, ni);
  for (int r = 0; r < ni; ++r)
    for (int c = 0; c < ni; ++c)
      if (E[i](r, c) != 0.0) pa.at(r, c) = v.a_i * E[i](r, c);
  m.set_block(0, 0, pa);
  MatExpr map = sys.A_i[i] * v.v1 + sys.B_i[i] * v.v3;
  m.set_block(0, ni, map);
  m.set_block(ni, 0, map.transpose());
  MatExpr drift = sys.A_i[i] * v.v2 + sys.B_i[i] * v.v4 - v.ci;
  m.set_block(0, ni + nn, drift);
  m.set_block(ni + nn, 0, drift.transpose());
  m.set_block(ni, ni, multiplier_mix(sys, P, i, mu));
  m.at(ni + nn, ni + nn) = v.a_i - multiplier_sum(mu);
  return m;
}

MatExpr state_row_lmi(const model::PartitionedSystem& sys, const std::vector<Mat>& P,
                      const model::PolytopicConstraints& con, int i, int k,
                      const SubsystemVars& v, const std::vector<LinExpr>& mult) {
  const int nn = sys.nn(i);
  Mat gk = con.G_i[i].row(k);
  MatExpr m(nn + 1, nn + 1);
  m.set_block(0, 0, multiplier_mix(sys, P, i, mult));
  MatExpr col = 0.5 * (v.v1 * gk.transpose());
  m.set_block(0, nn, col);
  m.set_block(nn, 0, col.transpose());
  m.at(nn, nn) = LinExpr(con.g_i[i](k)) - (gk * v.v2).at(0, 0) - multiplier_sum(mult);
  return m;
}

MatExpr input_row_lmi(const model::PartitionedSystem& sys, const std::vector<Mat>& P,
                      const model::PolytopicConstraints& con, int i, int l,
                      const SubsystemVars& v, const std::vector<LinExpr>& mult) {
  const int nn = sys.nn(i);
  Mat hl = con.H_i[i].row(l);
  MatExpr m(nn + 1, nn + 1);
  m.set_block(0, 0, multiplier_mix(sys, P, i, mult));
  MatExpr col = 0.5 * (v.v3.transpose() * hl.transpose());
  m.set_block(0, nn, col);
  m.set_block(nn, 0, col.transpose());
  m.at(nn, nn) = LinExpr(con.h_i[i](l)) - (hl * v.v4).at(0, 0) - multiplier_sum(mult);
  return m;
}

MatExpr stability_lmi(const model::PartitionedSystem& sys, const std::vector<Mat>& E,
                      const model::CostWeights& w, int i, const SubsystemVars& v) {
  const int ni = sys.nx[i], nn = sys.nn(i), mi = sys.nu[i];
  Mat qh = sym_sqrt(w.Q[i]);
  Mat rh = sym_sqrt(w.R[i]);
  const int dim = nn + ni + nn + mi;
  MatExpr m(dim, dim);

  Mat e_emb = neighbor_embedding(sys, E, i, i);
  MatExpr topleft(nn, nn);
  topleft.set_block(0, 0, e_emb);
  topleft.add_block(0, 0, v.v5);
  m.set_block(0, 0, topleft);

  MatExpr map = sys.A_i[i] * v.v1 + sys.B_i[i] * v.v3;
  m.set_block(nn, 0, map);
  m.set_block(0, nn, map.transpose());
  MatExpr pa(ni, ni);
  for (int r = 0; r < ni; ++r)
    for (int c = 0; c < ni; ++c)
      if (E[i](r, c) != 0.0) pa.at(r, c) = v.a_i * E[i](r, c);
  m.set_block(nn, nn, pa);

  MatExpr qv = qh * v.v1;
  m.set_block(nn + ni, 0, qv);
  m.set_block(0, nn + ni, qv.transpose());
  m.set_block(nn + ni, nn + ni, conic::scaled_identity(v.a_i, nn));

  MatExpr rv = rh * v.v3;
  m.set_block(nn + ni + nn, 0, rv);
  m.set_block(0, nn + ni + nn, rv.transpose());
  m.set_block(nn + ni + nn, nn + ni + nn, conic::scaled_identity(v.a_i, mi));
  return m;
}

MatExpr relaxation_cap_lmi(const SubsystemVars& v) { return v.T - v.v5; }

MatExpr coupling_sum_lmi(const model::PartitionedSystem& sys,
                         const std::vector<SubsystemVars>& vars, int i) {
  MatExpr acc(sys.nx[i], sys.nx[i]);
  for (int j : sys.neighbors[i]) {
    if (!sys.in_neighborhood(j, i)) continue;
    int off = sys.block_offset(j, i);
    for (int r = 0; r < sys.nx[i]; ++r)
      for (int c = 0; c < sys.nx[i]; ++c) acc.at(r, c) -= vars[j].T.at(off + r, off + c);
  }
  return acc;
}

MatExpr adp_invariance_lmi(const model::PartitionedSystem& sys, const std::vector<Mat>& P,
                           const std::vector<Mat>& E, int i, const SubsystemVars& v,
                           const std::vector<LinExpr>& theta) {
  const int ni = sys.nx[i], nn = sys.nn(i);
  MatExpr m(ni + nn, ni + nn);
  MatExpr pa(ni, ni);
  for (int r = 0; r < ni; ++r)
    for (int c = 0; c < ni; ++c)
      if (E[i](r, c) != 0.0) pa.at(r, c) = v.a_i * E[i](r, c);
  m.set_block(0, 0, pa);
  MatExpr map = sys.A_i[i] * v.v1 + sys.B_i[i] * v.v3;
  m.set_block(0, ni, map);
  m.set_block(ni, 0, map.transpose());
  m.set_block(ni, ni, multiplier_mix(sys, P, i, theta));
  return m;
}

LinExpr adp_invariance_tail(const SubsystemVars& v, const std::vector<LinExpr>& theta) {
  return v.a_i - multiplier_sum(theta);
}

MatExpr adp_state_row_lmi(const model::PartitionedSystem& sys, const std::vector<Mat>& P,
                          const model::PolytopicConstraints& con, int i, int k,
                          const SubsystemVars& v, const std::vector<LinExpr>& phi) {
  const int nn = sys.nn(i);
  Mat gk = con.G_i[i].row(k);
  MatExpr m(nn + 1, nn + 1);
  m.at(0, 0) = LinExpr(con.g_i[i](k));
  MatExpr row = gk * v.v1;
  for (int c = 0; c < nn; ++c) {
    m.at(0, 1 + c) = row.at(0, c);
    m.at(1 + c, 0) = row.at(0, c);
  }
  m.set_block(1, 1, multiplier_mix(sys, P, i, phi));
  return m;
}

MatExpr adp_input_row_lmi(const model::PartitionedSystem& sys, const std::vector<Mat>& P,
                          const model::PolytopicConstraints& con, int i, int l,
                          const SubsystemVars& v, const std::vector<LinExpr>& psi) {
  const int nn = sys.nn(i);
  Mat hl = con.H_i[i].row(l);
  MatExpr m(nn + 1, nn + 1);
  m.at(0, 0) = LinExpr(con.h_i[i](l));
  MatExpr row = hl * v.v3;
  for (int c = 0; c < nn; ++c) {
    m.at(0, 1 + c) = row.at(0, c);
    m.at(1 + c, 0) = row.at(0, c);
  }
  m.set_block(1, 1, multiplier_mix(sys, P, i, psi));
  return m;
}

}  // namespace dmpc::terminal
