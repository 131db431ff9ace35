#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dmpc/linalg.hpp"

namespace dmpc::model {

struct StructureViolation : Error {
  using Error::Error;
};
struct InvalidFactor : Error {
  using Error::Error;
};

/// Coupled LTI system split into M subsystems. Subsystem i owns a contiguous
/// state block of size nx[i] and input block of size nu[i]; its dynamics read
/// the stacked states of its neighborhood N_i (ascending subsystem index,
/// always containing i itself).
struct PartitionedSystem {
  int n = 0, m = 0, M = 0;
  std::vector<int> nx, nu;
  std::vector<std::vector<int>> neighbors;
  Mat A, B;

  std::vector<int> x_offset, u_offset;
  std::vector<Mat> A_i;  // nx[i] x nn(i)
  std::vector<Mat> B_i;  // nx[i] x nu[i]
  std::vector<Mat> U, W, V;
  std::vector<std::vector<int>> w_cols;  // global state indices stacked by W_i

  int nn(int i) const { return static_cast<int>(w_cols[i].size()); }
  /// Offset of subsystem j's block inside the neighborhood-i stacking.
  int block_offset(int i, int j) const;
  bool in_neighborhood(int i, int j) const;
  Vec neighborhood_state(int i, const Vec& x) const;
};

PartitionedSystem build_partitioned_system(const Mat& A, const Mat& B,
                                           const std::vector<std::pair<int, int>>& partition,
                                           const std::vector<std::vector<int>>& neighbors);

struct Polytope {
  Mat F;
  Vec f;
};

/// Scales {x : Fx <= f} about the origin to {x : Fx <= factor*f}.
Polytope scale_polytope(const Polytope& p, double factor);

/// Global polytopes plus their per-neighborhood (state) and per-subsystem
/// (input) row selections. A global state row lands in every neighborhood
/// that covers its support; input rows belong to exactly one subsystem.
struct PolytopicConstraints {
  Mat G;
  Vec g;
  Mat H;
  Vec h;
  std::vector<Mat> G_i;
  std::vector<Vec> g_i;
  std::vector<Mat> H_i;
  std::vector<Vec> h_i;
};

PolytopicConstraints decompose_constraints(const PartitionedSystem& sys, const Mat& G,
                                           const Vec& g, const Mat& H, const Vec& h);

struct CostWeights {
  std::vector<Mat> Q;  // nn(i) x nn(i)
  std::vector<Mat> R;  // nu[i] x nu[i]
  std::vector<Mat> S;  // nx[i] x nx[i]

  Mat global_Q(const PartitionedSystem& sys) const;
  Mat global_R(const PartitionedSystem& sys) const;
  Mat global_S(const PartitionedSystem& sys) const;
};

struct EquilibriumPoint {
  Vec x_e, u_e;
};

struct TargetPoint {
  Vec x_r;
};

struct ValidationCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_pass() const;
  std::string summary() const;
};

/// Structural checks: stabilizability (eigenvalue-wise PBH on eigenvalues
/// with |lambda| > 1), positive definiteness of the weights, admissibility of
/// the target point (equilibrium input exists and (x_r, u_r) is strictly
/// interior). With require_pd_q false the Q blocks only need to be PSD, which
/// the power-network family relies on.
ValidationReport validate_assumptions(const PartitionedSystem& sys,
                                      const PolytopicConstraints& con, const CostWeights& w,
                                      const TargetPoint& target, bool require_pd_q = true);

/// Stage cost |x - xe|_Q^2 + |u - ue|_R^2 with the assembled global weights.
double global_stage_cost(const PartitionedSystem& sys, const CostWeights& w, const Vec& x,
                         const Vec& u, const Vec& xe, const Vec& ue);

/// Same quantity accumulated subsystem by subsystem (neighborhood Q_i blocks).
double local_stage_cost_sum(const PartitionedSystem& sys, const CostWeights& w, const Vec& x,
                            const Vec& u, const Vec& xe, const Vec& ue);

}  // namespace dmpc::model
