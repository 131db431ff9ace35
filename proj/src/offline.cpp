#include "dmpc/offline.hpp"

namespace dmpc::offline {

using conic::LinExpr;
using conic::MatExpr;
using conic::Program;

Mat OfflineResult::global_P(const model::PartitionedSystem& sys) const {
  Mat p = Mat::Zero(sys.n, sys.n);
  for (int i = 0; i < sys.M; ++i)
    p.block(sys.x_offset[i], sys.x_offset[i], sys.nx[i], sys.nx[i]) = P[i];
  return p;
}

Mat OfflineResult::global_Kf(const model::PartitionedSystem& sys) const {
  Mat k = Mat::Zero(sys.m, sys.n);
  for (int i = 0; i < sys.M; ++i) k += sys.V[i].transpose() * Kf[i] * sys.W[i];
  return k;
}

Mat OfflineResult::P_neighborhood(const model::PartitionedSystem& sys, int i) const {
  Mat p = Mat::Zero(sys.nn(i), sys.nn(i));
  for (int j : sys.neighbors[i]) {
    int off = sys.block_offset(i, j);
    p.block(off, off, sys.nx[j], sys.nx[j]) = P[j];
  }
  return p;
}

Mat OfflineResult::E_neighborhood(const model::PartitionedSystem& sys, int i) const {
  Mat e = Mat::Zero(sys.nn(i), sys.nn(i));
  for (int j : sys.neighbors[i]) {
    int off = sys.block_offset(i, j);
    e.block(off, off, sys.nx[j], sys.nx[j]) = E[j];
  }
  return e;
}

namespace {

MatExpr sym_to_expr(const Program::SymHandle& h) {
  MatExpr m(h.n, h.n);
  for (int i = 0; i < h.n; ++i)
    for (int j = 0; j < h.n; ++j) m.at(i, j) = LinExpr::variable(h(i, j));
  return m;
}

}  // namespace

OfflineResult synthesize_terminal_cost(const model::PartitionedSystem& sys,
                                       const model::CostWeights& weights, double eps_o,
                                       const conic::SolverOptions& opts) {
  Program prog;
  std::vector<Program::SymHandle> E, H;
  std::vector<std::vector<int>> Y;
  // S_i is block diagonal along the neighborhood partition.
  std::vector<std::vector<Program::SymHandle>> S;
  for (int i = 0; i < sys.M; ++i) {
    E.push_back(prog.add_symmetric("E" + std::to_string(i), sys.nx[i]));
    Y.push_back(prog.add_matrix("Y" + std::to_string(i), sys.nu[i], sys.nn(i)));
    H.push_back(prog.add_symmetric("H" + std::to_string(i), sys.nn(i)));
    std::vector<Program::SymHandle> si;
    for (int j : sys.neighbors[i])
      si.push_back(prog.add_symmetric("S" + std::to_string(i) + "_" + std::to_string(j),
                                      sys.nx[j]));
    S.push_back(std::move(si));
  }

  auto y_expr = [&](int i) {
    MatExpr m(sys.nu[i], sys.nn(i));
    for (int r = 0; r < sys.nu[i]; ++r)
      for (int c = 0; c < sys.nn(i); ++c)
        m.at(r, c) = LinExpr::variable(Y[i][r * sys.nn(i) + c]);
    return m;
  };
  auto s_expr = [&](int i) {  // full nn(i) block-diagonal S_i
    MatExpr m(sys.nn(i), sys.nn(i));
    for (size_t bi = 0; bi < S[i].size(); ++bi) {
      int j = sys.neighbors[i][bi];
      int off = sys.block_offset(i, j);
      m.set_block(off, off, sym_to_expr(S[i][bi]));
    }
    return m;
  };
  auto e_nbhd = [&](int i) {  // E_{N_i} = blockdiag(E_j, j in N_i)
    MatExpr m(sys.nn(i), sys.nn(i));
    for (int j : sys.neighbors[i]) m.set_block(sys.block_offset(i, j), sys.block_offset(i, j),
                                               sym_to_expr(E[j]));
    return m;
  };

  for (int i = 0; i < sys.M; ++i) {
    const int nn = sys.nn(i), ni = sys.nx[i], mi = sys.nu[i];
    Mat qh = sym_sqrt(weights.Q[i]);
    Mat rh = sym_sqrt(weights.R[i]);

    // E_i >= eps_o I
    MatExpr floor_i = sym_to_expr(E[i]);
    for (int k = 0; k < ni; ++k) floor_i.at(k, k) -= eps_o;
    prog.add_psd_block(floor_i);

    // Lyapunov decrease LMI in inverse coordinates.
    MatExpr lmi(nn + ni + nn + mi, nn + ni + nn + mi);
    MatExpr e11(nn, nn);
    e11.set_block(sys.block_offset(i, i), sys.block_offset(i, i), sym_to_expr(E[i]));
    lmi.set_block(0, 0, e11 + sym_to_expr(H[i]));
    MatExpr aeby = sys.A_i[i] * e_nbhd(i) + sys.B_i[i] * y_expr(i);
    lmi.set_block(nn, 0, aeby);
    lmi.set_block(0, nn, aeby.transpose());
    lmi.set_block(nn, nn, sym_to_expr(E[i]));
    MatExpr qe = qh * e_nbhd(i);
    lmi.set_block(nn + ni, 0, qe);
    lmi.set_block(0, nn + ni, qe.transpose());
    lmi.set_block(nn + ni, nn + ni, Mat::Identity(nn, nn));
    MatExpr ry = rh * y_expr(i);
    lmi.set_block(nn + ni + nn, 0, ry);
    lmi.set_block(0, nn + ni + nn, ry.transpose());
    lmi.set_block(nn + ni + nn, nn + ni + nn, Mat::Identity(mi, mi));
    prog.add_psd_block(lmi);

    // H_i <= S_i
    prog.add_psd_block(s_expr(i) - sym_to_expr(H[i]));

    // Relaxations cancel across neighborhoods:
    // sum_{j in N_i} (block of S_j at subsystem i) <= 0.
    MatExpr acc(ni, ni);
    for (int j : sys.neighbors[i]) {
      if (!sys.in_neighborhood(j, i)) continue;
      size_t bi = 0;
      while (sys.neighbors[j][bi] != i) ++bi;
      acc.add_block(0, 0, sym_to_expr(S[j][bi]), -1.0);
    }
    prog.add_psd_block(acc);

    for (int k = 0; k < ni; ++k) prog.add_cost(-LinExpr::variable(E[i](k, k)));
  }

  auto r = prog.solve(opts);
  if (r.status == conic::Status::Infeasible)
    throw SynthesisInfeasible("offline synthesis SDP is infeasible for this structure");
  if (r.status != conic::Status::Optimal)
    throw SolverFailure("offline synthesis SDP: " + conic::to_string(r.status));

  OfflineResult out;
  out.eps_o = eps_o;
  out.objective = -r.objective;
  for (int i = 0; i < sys.M; ++i) {
    Mat Ei = symmetrize(Program::eval(sym_to_expr(E[i]), r.y));
    out.E.push_back(Ei);
    out.P.push_back(symmetrize(Ei.inverse()));
    out.Y.push_back(Program::eval(y_expr(i), r.y));
    out.H.push_back(symmetrize(Program::eval(sym_to_expr(H[i]), r.y)));
    out.S.push_back(symmetrize(Program::eval(s_expr(i), r.y)));
  }
  for (int i = 0; i < sys.M; ++i) out.Kf.push_back(out.Y[i] * out.P_neighborhood(sys, i));
  return out;
}

}  // namespace dmpc::offline
