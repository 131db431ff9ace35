#include "dmpc/ocp.hpp"

#include <cmath>

namespace dmpc::ocp {

using conic::LinExpr;
using conic::MatExpr;
using conic::Program;

SchemeKind scheme_from_string(const std::string& name) {
  if (name == "dst-var") return SchemeKind::DstVar;
  if (name == "dst-fxd") return SchemeKind::DstFxd;
  if (name == "dst-adp") return SchemeKind::DstAdp;
  if (name == "dst-rlx") return SchemeKind::DstRlx;
  throw Error("unknown scheme '" + name + "'");
}

std::string to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::DstVar: return "dst-var";
    case SchemeKind::DstFxd: return "dst-fxd";
    case SchemeKind::DstAdp: return "dst-adp";
    case SchemeKind::DstRlx: return "dst-rlx";
  }
  return "?";
}

namespace {

LinExpr dot_row(const Mat& row, const std::vector<int>& vars) {
  LinExpr e;
  for (int c = 0; c < row.cols(); ++c)
    if (row(0, c) != 0.0) e += LinExpr::variable(vars[c], row(0, c));
  return e;
}

MatExpr vector_expr(const std::vector<int>& vars) {
  MatExpr m(static_cast<int>(vars.size()), 1);
  for (size_t i = 0; i < vars.size(); ++i) m.at(static_cast<int>(i), 0) = LinExpr::variable(vars[i]);
  return m;
}

MatExpr sym_expr(const Program::SymHandle& h) {
  MatExpr m(h.n, h.n);
  for (int i = 0; i < h.n; ++i)
    for (int j = 0; j < h.n; ++j) m.at(i, j) = LinExpr::variable(h(i, j));
  return m;
}

}  // namespace

Assembled assemble(const Scheme& scheme, const model::PartitionedSystem& sys,
                   const model::PolytopicConstraints& con, const model::CostWeights& w,
                   const offline::OfflineResult& off, const Vec& x0, const Vec& x_r) {
  if (off.P.size() != static_cast<size_t>(sys.M))
    throw MissingOffline("offline result does not match the partition");
  if (x0.size() != sys.n) throw DimensionMismatch("x0 dimension");
  if (scheme.horizon < 1) throw Error("horizon must be at least 1");

  const SchemeKind kind = scheme.kind;
  const bool var_gain = kind == SchemeKind::DstVar || kind == SchemeKind::DstAdp;
  const bool origin_set = kind == SchemeKind::DstAdp;       // c = 0, d = 0
  const bool regulation = kind == SchemeKind::DstAdp || kind == SchemeKind::DstRlx;
  const int T = scheme.horizon;

  Assembled out;
  out.T = T;
  Program& prog = out.prog;

  for (int t = 0; t <= T; ++t) out.x.push_back(prog.add_vector("x" + std::to_string(t), sys.n));
  for (int t = 0; t < T; ++t) out.u.push_back(prog.add_vector("u" + std::to_string(t), sys.m));
  for (int i = 0; i < sys.M; ++i) out.a.push_back(prog.add_scalar("a" + std::to_string(i)));
  if (!origin_set) out.c = prog.add_vector("c", sys.n);
  if (kind == SchemeKind::DstFxd) {
    out.xe = prog.add_vector("xe", sys.n);
    out.ue = prog.add_vector("ue", sys.m);
  }
  for (int i = 0; i < sys.M; ++i) {
    if (var_gain)
      out.v3.push_back(prog.add_matrix("v3_" + std::to_string(i), sys.nu[i], sys.nn(i)));
    if (kind == SchemeKind::DstVar || kind == SchemeKind::DstFxd)
      out.v4.push_back(prog.add_vector((var_gain ? "v4_" : "d_") + std::to_string(i), sys.nu[i]));
    if (var_gain) {
      out.v5.push_back(prog.add_symmetric("v5_" + std::to_string(i), sys.nn(i)));
      std::vector<Program::SymHandle> blocks;
      for (int j : sys.neighbors[i])
        blocks.push_back(
            prog.add_symmetric("T" + std::to_string(i) + "_" + std::to_string(j), sys.nx[j]));
      out.T_blocks.push_back(std::move(blocks));
    }
  }

  // Per-subsystem affine views of the scheme variables.
  std::vector<terminal::SubsystemVars> sv(sys.M);
  for (int i = 0; i < sys.M; ++i) {
    const int nn = sys.nn(i);
    MatExpr v1(nn, nn);
    for (int j : sys.neighbors[i]) {
      int offj = sys.block_offset(i, j);
      for (int k = 0; k < sys.nx[j]; ++k) v1.at(offj + k, offj + k) = LinExpr::variable(out.a[j]);
    }
    sv[i].v1 = v1;
    sv[i].a_i = LinExpr::variable(out.a[i]);

    MatExpr v2(nn, 1), ci(sys.nx[i], 1);
    if (!origin_set) {
      for (int k = 0; k < nn; ++k) v2.at(k, 0) = LinExpr::variable(out.c[sys.w_cols[i][k]]);
      for (int k = 0; k < sys.nx[i]; ++k)
        ci.at(k, 0) = LinExpr::variable(out.c[sys.x_offset[i] + k]);
    }
    sv[i].v2 = v2;
    sv[i].ci = ci;

    if (var_gain) {
      MatExpr v3(sys.nu[i], nn);
      for (int r = 0; r < sys.nu[i]; ++r)
        for (int cc = 0; cc < nn; ++cc) v3.at(r, cc) = LinExpr::variable(out.v3[i][r * nn + cc]);
      sv[i].v3 = v3;
    } else {
      sv[i].v3 = off.Kf[i] * v1;
    }

    switch (kind) {
      case SchemeKind::DstVar: sv[i].v4 = vector_expr(out.v4[i]); break;
      case SchemeKind::DstAdp: sv[i].v4 = MatExpr(sys.nu[i], 1); break;
      case SchemeKind::DstFxd:
        sv[i].v4 = off.Kf[i] * v2 + vector_expr(out.v4[i]);
        break;
      case SchemeKind::DstRlx: sv[i].v4 = off.Kf[i] * v2; break;
    }

    if (var_gain) {
      sv[i].v5 = sym_expr(out.v5[i]);
      MatExpr Tm(nn, nn);
      for (size_t b = 0; b < out.T_blocks[i].size(); ++b) {
        int offj = sys.block_offset(i, sys.neighbors[i][b]);
        Tm.set_block(offj, offj, sym_expr(out.T_blocks[i][b]));
      }
      sv[i].T = Tm;
    }
  }

  // Initialization and dynamics.
  for (int k = 0; k < sys.n; ++k)
    prog.add_equality(LinExpr::variable(out.x[0][k]) - x0(k));
  for (int t = 0; t < T; ++t)
    for (int r = 0; r < sys.n; ++r) {
      LinExpr e = LinExpr::variable(out.x[t + 1][r]);
      e -= dot_row(sys.A.row(r), out.x[t]);
      e -= dot_row(sys.B.row(r), out.u[t]);
      prog.add_equality(e);
    }

  // Trajectory polytopes.
  for (int t = 0; t <= T; ++t)
    for (int r = 0; r < con.G.rows(); ++r)
      prog.add_nonneg(LinExpr(con.g(r)) - dot_row(con.G.row(r), out.x[t]));
  for (int t = 0; t < T; ++t)
    for (int r = 0; r < con.H.rows(); ++r)
      prog.add_nonneg(LinExpr(con.h(r)) - dot_row(con.H.row(r), out.u[t]));

  // Equilibrium constraints.
  std::vector<LinExpr> ue_stacked(sys.m);
  if (kind == SchemeKind::DstVar) {
    for (int i = 0; i < sys.M; ++i) {
      MatExpr rhs = sys.A_i[i] * sv[i].v2 + sys.B_i[i] * sv[i].v4;
      for (int k = 0; k < sys.nx[i]; ++k)
        prog.add_equality(sv[i].ci.at(k, 0) - rhs.at(k, 0));
      for (int k = 0; k < sys.nu[i]; ++k) ue_stacked[sys.u_offset[i] + k] = sv[i].v4.at(k, 0);
    }
    for (int r = 0; r < con.G.rows(); ++r)
      prog.add_nonneg(LinExpr(scheme.eps1 * con.g(r)) - dot_row(con.G.row(r), out.c));
    for (int r = 0; r < con.H.rows(); ++r) {
      LinExpr e(scheme.eps1 * con.h(r));
      for (int cc = 0; cc < sys.m; ++cc)
        if (con.H(r, cc) != 0.0) e -= ue_stacked[cc] * con.H(r, cc);
      prog.add_nonneg(e);
    }
  } else if (kind == SchemeKind::DstFxd) {
    for (int r = 0; r < sys.n; ++r) {
      LinExpr e = LinExpr::variable(out.xe[r]);
      e -= dot_row(sys.A.row(r), out.xe);
      e -= dot_row(sys.B.row(r), out.ue);
      prog.add_equality(e);
    }
    for (int i = 0; i < sys.M; ++i) {
      // u_{e,i} = K_f,i x_{e,N_i} + d_i
      for (int r = 0; r < sys.nu[i]; ++r) {
        LinExpr e = LinExpr::variable(out.ue[sys.u_offset[i] + r]);
        for (int cc = 0; cc < sys.nn(i); ++cc)
          if (off.Kf[i](r, cc) != 0.0)
            e -= LinExpr::variable(out.xe[sys.w_cols[i][cc]], off.Kf[i](r, cc));
        e -= LinExpr::variable(out.v4[i][r]);
        prog.add_equality(e);
      }
    }
    for (int r = 0; r < con.G.rows(); ++r)
      prog.add_nonneg(LinExpr(scheme.eps1 * con.g(r)) - dot_row(con.G.row(r), out.xe));
    for (int r = 0; r < con.H.rows(); ++r)
      prog.add_nonneg(LinExpr(scheme.eps1 * con.h(r)) - dot_row(con.H.row(r), out.ue));
  }

  // Terminal-set size floor keeps the change of variables bijective.
  const double a_floor = std::sqrt(scheme.alpha_min);
  for (int i = 0; i < sys.M; ++i)
    prog.add_nonneg(LinExpr::variable(out.a[i]) - a_floor);

  // Terminal-ingredient LMIs.
  auto mults = [&](const std::string& tag, int i) {
    std::vector<LinExpr> m;
    for (int j : sys.neighbors[i]) {
      int idx = prog.add_scalar(tag + std::to_string(i) + "_" + std::to_string(j));
      prog.add_nonneg(LinExpr::variable(idx));
      m.push_back(LinExpr::variable(idx));
    }
    return m;
  };

  for (int i = 0; i < sys.M; ++i) {
    MatExpr x_term(sys.nx[i], 1);
    for (int k = 0; k < sys.nx[i]; ++k)
      x_term.at(k, 0) = LinExpr::variable(out.x[T][sys.x_offset[i] + k]);
    prog.add_psd_block(terminal::membership_lmi(sys, off.E, i, x_term, sv[i]));

    if (kind == SchemeKind::DstAdp) {
      auto theta = mults("theta", i);
      prog.add_psd_block(terminal::adp_invariance_lmi(sys, off.P, off.E, i, sv[i], theta));
      prog.add_nonneg(terminal::adp_invariance_tail(sv[i], theta));
    } else {
      auto mu = mults("mu", i);
      prog.add_psd_block(terminal::invariance_lmi(sys, off.P, off.E, i, sv[i], mu));
    }

    for (int k = 0; k < con.G_i[i].rows(); ++k) {
      auto rho = mults("rho" + std::to_string(k) + "_", i);
      if (kind == SchemeKind::DstAdp) {
        prog.add_psd_block(terminal::adp_state_row_lmi(sys, off.P, con, i, k, sv[i], rho));
        prog.add_nonneg(LinExpr(con.g_i[i](k)) -
                        [&] {
                          LinExpr s;
                          for (const auto& r : rho) s += r;
                          return s;
                        }());
      } else {
        prog.add_psd_block(terminal::state_row_lmi(sys, off.P, con, i, k, sv[i], rho));
      }
    }
    for (int l = 0; l < con.H_i[i].rows(); ++l) {
      auto tau = mults("tau" + std::to_string(l) + "_", i);
      if (kind == SchemeKind::DstAdp) {
        prog.add_psd_block(terminal::adp_input_row_lmi(sys, off.P, con, i, l, sv[i], tau));
        prog.add_nonneg(LinExpr(con.h_i[i](l)) -
                        [&] {
                          LinExpr s;
                          for (const auto& r : tau) s += r;
                          return s;
                        }());
      } else {
        prog.add_psd_block(terminal::input_row_lmi(sys, off.P, con, i, l, sv[i], tau));
      }
    }
  }

  if (var_gain) {
    for (int i = 0; i < sys.M; ++i) {
      prog.add_psd_block(terminal::stability_lmi(sys, off.E, w, i, sv[i]));
      prog.add_psd_block(terminal::relaxation_cap_lmi(sv[i]));
      prog.add_psd_block(terminal::coupling_sum_lmi(sys, sv, i));
    }
  }

  // Cost, lowered term by term.
  auto xref_n = [&](int i) -> MatExpr {  // neighborhood reference
    if (kind == SchemeKind::DstVar) return sv[i].v2;
    if (kind == SchemeKind::DstFxd) {
      MatExpr m(sys.nn(i), 1);
      for (int k = 0; k < sys.nn(i); ++k) m.at(k, 0) = LinExpr::variable(out.xe[sys.w_cols[i][k]]);
      return m;
    }
    return MatExpr(sys.nn(i), 1);
  };
  auto uref_i = [&](int i) -> MatExpr {
    if (kind == SchemeKind::DstVar) return sv[i].v4;
    if (kind == SchemeKind::DstFxd) {
      MatExpr m(sys.nu[i], 1);
      for (int k = 0; k < sys.nu[i]; ++k)
        m.at(k, 0) = LinExpr::variable(out.ue[sys.u_offset[i] + k]);
      return m;
    }
    return MatExpr(sys.nu[i], 1);
  };
  auto xref_own = [&](int i) -> MatExpr {
    if (kind == SchemeKind::DstVar) return sv[i].ci;
    if (kind == SchemeKind::DstFxd) {
      MatExpr m(sys.nx[i], 1);
      for (int k = 0; k < sys.nx[i]; ++k)
        m.at(k, 0) = LinExpr::variable(out.xe[sys.x_offset[i] + k]);
      return m;
    }
    return MatExpr(sys.nx[i], 1);
  };

  for (int i = 0; i < sys.M; ++i) {
    Mat qh = sym_sqrt(w.Q[i]);
    Mat rh = sym_sqrt(w.R[i]);
    Mat ph = sym_sqrt(off.P[i]);
    Mat sh = sym_sqrt(w.S[i]);
    for (int t = 0; t < T; ++t) {
      MatExpr xn(sys.nn(i), 1);
      for (int k = 0; k < sys.nn(i); ++k)
        xn.at(k, 0) = LinExpr::variable(out.x[t][sys.w_cols[i][k]]);
      MatExpr ui(sys.nu[i], 1);
      for (int k = 0; k < sys.nu[i]; ++k)
        ui.at(k, 0) = LinExpr::variable(out.u[t][sys.u_offset[i] + k]);
      MatExpr dq = qh * (xn - xref_n(i));
      MatExpr dr = rh * (ui - uref_i(i));
      std::vector<LinExpr> rows;
      for (int k = 0; k < sys.nn(i); ++k) rows.push_back(dq.at(k, 0));
      for (int k = 0; k < sys.nu[i]; ++k) rows.push_back(dr.at(k, 0));
      prog.lower_quadratic(rows, "t_stage" + std::to_string(i) + "_" + std::to_string(t));
    }
    MatExpr xT(sys.nx[i], 1);
    for (int k = 0; k < sys.nx[i]; ++k)
      xT.at(k, 0) = LinExpr::variable(out.x[T][sys.x_offset[i] + k]);
    MatExpr dp = ph * (xT - xref_own(i));
    std::vector<LinExpr> rows;
    for (int k = 0; k < sys.nx[i]; ++k) rows.push_back(dp.at(k, 0));
    if (!regulation) {
      MatExpr dxe = xref_own(i);
      Mat xri = x_r.segment(sys.x_offset[i], sys.nx[i]);
      MatExpr ds = sh * (dxe - MatExpr(xri));
      for (int k = 0; k < sys.nx[i]; ++k) rows.push_back(ds.at(k, 0));
    }
    prog.lower_quadratic(rows, "t_term" + std::to_string(i));
  }
  return out;
}

namespace {

Vec extract(const Vec& y, const std::vector<int>& idx) {
  Vec v(static_cast<int>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) v(static_cast<int>(k)) = y(idx[k]);
  return v;
}

}  // namespace

StepResult solve_step(const Scheme& scheme, const model::PartitionedSystem& sys,
                      const model::PolytopicConstraints& con, const model::CostWeights& w,
                      const offline::OfflineResult& off, const Vec& x0, const Vec& x_r) {
  Assembled asmb = assemble(scheme, sys, con, w, off, x0, x_r);
  auto r = asmb.prog.solve(scheme.solver);
  StepResult out;
  out.status = r.status;
  if (r.status != conic::Status::Optimal) return out;

  const int T = asmb.T;
  Plan plan;
  plan.X = Mat(sys.n, T + 1);
  plan.U = Mat(sys.m, T);
  for (int t = 0; t <= T; ++t) plan.X.col(t) = extract(r.y, asmb.x[t]);
  for (int t = 0; t < T; ++t) plan.U.col(t) = extract(r.y, asmb.u[t]);

  double dyn_resid = (plan.X.col(0) - x0).cwiseAbs().maxCoeff();
  for (int t = 0; t < T; ++t)
    dyn_resid = std::max(dyn_resid, (plan.X.col(t + 1) - sys.A * plan.X.col(t) -
                                     sys.B * plan.U.col(t))
                                        .cwiseAbs()
                                        .maxCoeff());
  if (dyn_resid > 1e-6) {
    out.status = conic::Status::NumericalFailure;
    return out;
  }
  plan.X.col(0) = x0;

  // Recover the terminal ingredients through the inverse change of variables.
  terminal::VarChangeVars v;
  Vec a(sys.M);
  for (int i = 0; i < sys.M; ++i) a(i) = r.y(asmb.a[i]);
  Vec c = asmb.c.empty() ? Vec(Vec::Zero(sys.n)) : extract(r.y, asmb.c);
  const bool var_gain =
      scheme.kind == SchemeKind::DstVar || scheme.kind == SchemeKind::DstAdp;
  for (int i = 0; i < sys.M; ++i) {
    const int nn = sys.nn(i);
    Vec v1(nn);
    for (int j : sys.neighbors[i])
      v1.segment(sys.block_offset(i, j), sys.nx[j]).setConstant(a(j));
    Vec v2 = sys.neighborhood_state(i, c);
    Mat v3;
    if (var_gain) {
      v3 = Mat(sys.nu[i], nn);
      for (int rr = 0; rr < sys.nu[i]; ++rr)
        for (int cc = 0; cc < nn; ++cc) v3(rr, cc) = r.y(asmb.v3[i][rr * nn + cc]);
    } else {
      v3 = off.Kf[i] * v1.asDiagonal();
    }
    Vec v4;
    switch (scheme.kind) {
      case SchemeKind::DstVar: v4 = extract(r.y, asmb.v4[i]); break;
      case SchemeKind::DstAdp: v4 = Vec::Zero(sys.nu[i]); break;
      case SchemeKind::DstFxd: v4 = off.Kf[i] * v2 + extract(r.y, asmb.v4[i]); break;
      case SchemeKind::DstRlx: v4 = off.Kf[i] * v2; break;
    }
    Mat v5;
    if (var_gain) {
      v5 = Mat(nn, nn);
      for (int rr = 0; rr < nn; ++rr)
        for (int cc = 0; cc < nn; ++cc) v5(rr, cc) = r.y(asmb.v5[i](rr, cc));
    } else {
      // Fixed-gain schemes reuse the offline relaxation form.
      Mat pn = off.P_neighborhood(sys, i);
      Mat gamma = pn * off.H[i] * pn;
      v5 = v1.asDiagonal() * gamma * v1.asDiagonal() / a(i);
    }
    v.v1.push_back(std::move(v1));
    v.v2.push_back(std::move(v2));
    v.v3.push_back(std::move(v3));
    v.v4.push_back(std::move(v4));
    v.v5.push_back(symmetrize(v5));
  }
  plan.ingredients = terminal::inverse_map(v, sys);

  switch (scheme.kind) {
    case SchemeKind::DstVar: {
      plan.x_e = c;
      plan.u_e = Vec(sys.m);
      for (int i = 0; i < sys.M; ++i)
        plan.u_e.segment(sys.u_offset[i], sys.nu[i]) = v.v4[i];
      break;
    }
    case SchemeKind::DstFxd:
      plan.x_e = extract(r.y, asmb.xe);
      plan.u_e = extract(r.y, asmb.ue);
      break;
    default:
      plan.x_e = Vec::Zero(sys.n);
      plan.u_e = Vec::Zero(sys.m);
  }

  // Exact quadratic cost at the solution.
  const bool regulation =
      scheme.kind == SchemeKind::DstAdp || scheme.kind == SchemeKind::DstRlx;
  double cost = 0;
  for (int i = 0; i < sys.M; ++i) {
    for (int t = 0; t < T; ++t) {
      Vec dxn = sys.neighborhood_state(i, plan.X.col(t) - plan.x_e);
      Vec dui = sys.V[i] * (plan.U.col(t) - plan.u_e);
      cost += dxn.dot(w.Q[i] * dxn) + dui.dot(w.R[i] * dui);
    }
    Vec dT = sys.U[i] * (plan.X.col(T) - plan.x_e);
    cost += dT.dot(off.P[i] * dT);
    if (!regulation) {
      Vec de = sys.U[i] * plan.x_e - x_r.segment(sys.x_offset[i], sys.nx[i]);
      cost += de.dot(w.S[i] * de);
    }
  }
  plan.cost = cost;
  plan.objective = r.objective;
  plan.diagnostics = r;
  out.plan = std::move(plan);
  return out;
}

model::EquilibriumPoint equilibrium_of(const Plan& plan, const Scheme& scheme,
                                       const model::PartitionedSystem& sys,
                                       const model::PolytopicConstraints& con) {
  model::EquilibriumPoint eq{plan.x_e, plan.u_e};
  double resid = (eq.x_e - sys.A * eq.x_e - sys.B * eq.u_e).cwiseAbs().maxCoeff();
  if (resid > 1e-6) throw Error("equilibrium residual " + std::to_string(resid));
  if (scheme.kind == SchemeKind::DstVar || scheme.kind == SchemeKind::DstFxd) {
    const double tol = 1e-7;
    if (con.G.rows() > 0 &&
        (con.G * eq.x_e - scheme.eps1 * con.g).maxCoeff() > tol)
      throw Error("equilibrium state leaves the shrunk constraint set");
    if (con.H.rows() > 0 &&
        (con.H * eq.u_e - scheme.eps1 * con.h).maxCoeff() > tol)
      throw Error("equilibrium input leaves the shrunk constraint set");
  }
  if (scheme.kind == SchemeKind::DstVar) {
    for (int i = 0; i < sys.M; ++i) {
      Vec ci = plan.ingredients.c[i];
      if ((sys.U[i] * eq.x_e - ci).cwiseAbs().maxCoeff() > 1e-8)
        throw Error("variable-gain equilibrium is not at the terminal-set center");
    }
  }
  return eq;
}

}  // namespace dmpc::ocp
