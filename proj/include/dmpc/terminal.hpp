#pragma once

#include "dmpc/conic.hpp"
#include "dmpc/model.hpp"
#include "dmpc/offline.hpp"

namespace dmpc::terminal {

struct NonpositiveAlpha : Error {
  using Error::Error;
};
struct SingularV1 : Error {
  using Error::Error;
};
struct InconsistentSharedAlpha : Error {
  using Error::Error;
};

/// Online terminal ingredients: ellipsoid X_{f,i} = {x : (x-c_i)'P_i(x-c_i)
/// <= alpha_i} with affine controller u = K_i x_{N_i} + d_i and the
/// relaxation form Gamma_i. P_i is the fixed offline block.
struct TerminalIngredients {
  Vec alpha;               // one per subsystem
  std::vector<Vec> c;      // nx[i]
  std::vector<Mat> K;      // nu[i] x nn(i)
  std::vector<Vec> d;      // nu[i]
  std::vector<Mat> Gamma;  // nn(i) x nn(i), symmetric
};

/// Images of the bijective change of variables, kept per neighborhood so the
/// shared-alpha consistency of overlapping neighborhoods is checkable.
struct VarChangeVars {
  std::vector<Vec> v1;  // diag of alpha_{N_i}^{1/2}
  std::vector<Vec> v2;  // c_{N_i}
  std::vector<Mat> v3;  // K_i alpha_{N_i}^{1/2}
  std::vector<Vec> v4;  // K_i c_{N_i} + d_i
  std::vector<Mat> v5;  // alpha^{1/2} Gamma alpha_i^{-1/2} alpha^{1/2}
};

VarChangeVars forward_map(const TerminalIngredients& ti, const model::PartitionedSystem& sys);
TerminalIngredients inverse_map(const VarChangeVars& v, const model::PartitionedSystem& sys);

/// Per-subsystem conic views used by the LMI builders: affine expressions of
/// the decision variables in the shapes the printed blocks expect.
struct SubsystemVars {
  conic::MatExpr v1;   // nn x nn diagonal, alpha_{N_i}^{1/2}
  conic::LinExpr a_i;  // alpha_i^{1/2}
  conic::MatExpr v2;   // nn x 1 center stack
  conic::MatExpr ci;   // nx_i x 1 own center
  conic::MatExpr v3;   // nu_i x nn gain image
  conic::MatExpr v4;   // nu_i x 1 input offset image
  conic::MatExpr v5;   // nn x nn relaxation image (variable-gain schemes)
  conic::MatExpr T;    // nn x nn block-diagonal bound (variable-gain schemes)
};

/// P_j embedded at neighbor j's block inside neighborhood i, zero elsewhere.
Mat neighbor_embedding(const model::PartitionedSystem& sys, const std::vector<Mat>& P, int i,
                       int j);

/// Terminal membership (x_i(T) in the ellipsoid) as a Schur block.
conic::MatExpr membership_lmi(const model::PartitionedSystem& sys, const std::vector<Mat>& E,
                              int i, const conic::MatExpr& x_term, const SubsystemVars& v);

/// One-step invariance of the ellipsoid under the affine terminal controller,
/// S-procedure multipliers mu (one per neighbor).
conic::MatExpr invariance_lmi(const model::PartitionedSystem& sys, const std::vector<Mat>& P,
                              const std::vector<Mat>& E, int i, const SubsystemVars& v,
                              const std::vector<conic::LinExpr>& mu);

/// Robust satisfaction of state-constraint row k over the neighborhood
/// ellipsoids.
conic::MatExpr state_row_lmi(const model::PartitionedSystem& sys, const std::vector<Mat>& P,
                             const model::PolytopicConstraints& con, int i, int k,
                             const SubsystemVars& v, const std::vector<conic::LinExpr>& mult);

/// Robust satisfaction of input-constraint row l under the terminal controller.
conic::MatExpr input_row_lmi(const model::PartitionedSystem& sys, const std::vector<Mat>& P,
                             const model::PolytopicConstraints& con, int i, int l,
                             const SubsystemVars& v, const std::vector<conic::LinExpr>& mult);

/// Closed-loop cost-decrease block for the variable-gain scheme.
conic::MatExpr stability_lmi(const model::PartitionedSystem& sys, const std::vector<Mat>& E,
                             const model::CostWeights& w, int i, const SubsystemVars& v);

/// T_i - v5_i >= 0.
conic::MatExpr relaxation_cap_lmi(const SubsystemVars& v);

/// -(sum over neighborhoods j of T_j's block at subsystem i) >= 0.
conic::MatExpr coupling_sum_lmi(const model::PartitionedSystem& sys,
                                const std::vector<SubsystemVars>& vars, int i);

/// Origin-centered baseline pieces (adaptive-set scheme): 2x2 invariance
/// block plus its scalar tail, and the split constraint-row blocks.
conic::MatExpr adp_invariance_lmi(const model::PartitionedSystem& sys, const std::vector<Mat>& P,
                                  const std::vector<Mat>& E, int i, const SubsystemVars& v,
                                  const std::vector<conic::LinExpr>& theta);
conic::LinExpr adp_invariance_tail(const SubsystemVars& v,
                                   const std::vector<conic::LinExpr>& theta);
conic::MatExpr adp_state_row_lmi(const model::PartitionedSystem& sys, const std::vector<Mat>& P,
                                 const model::PolytopicConstraints& con, int i, int k,
                                 const SubsystemVars& v, const std::vector<conic::LinExpr>& phi);
conic::MatExpr adp_input_row_lmi(const model::PartitionedSystem& sys, const std::vector<Mat>& P,
                                 const model::PolytopicConstraints& con, int i, int l,
                                 const SubsystemVars& v, const std::vector<conic::LinExpr>& psi);

}  // namespace dmpc::terminal
