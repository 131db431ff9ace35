#pragma once

#include "dmpc/conic.hpp"
#include "dmpc/model.hpp"

namespace dmpc::offline {

struct SynthesisInfeasible : Error {
  using Error::Error;
};
struct SolverFailure : Error {
  using Error::Error;
};

/// Result of the structured Lyapunov synthesis: block terminal cost P_i with
/// E_i = P_i^{-1}, the auxiliary gain data Y_i and relaxation matrices, and
/// the assembled fixed gains K_{f,i} = Y_i * P_{N_i}.
struct OfflineResult {
  std::vector<Mat> E;
  std::vector<Mat> P;
  std::vector<Mat> Y;
  std::vector<Mat> H;
  std::vector<Mat> S;
  std::vector<Mat> Kf;
  double eps_o = 1e-6;
  double objective = 0.0;  // sum of trace(E_i)

  Mat global_P(const model::PartitionedSystem& sys) const;
  Mat global_Kf(const model::PartitionedSystem& sys) const;
  Mat P_neighborhood(const model::PartitionedSystem& sys, int i) const;  // W_i P W_i'
  Mat E_neighborhood(const model::PartitionedSystem& sys, int i) const;
};

/// Solves the offline synthesis SDP: maximize sum trace(E_i) over the
/// per-subsystem Lyapunov LMIs with block-diagonal neighborhood relaxations.
OfflineResult synthesize_terminal_cost(const model::PartitionedSystem& sys,
                                       const model::CostWeights& weights, double eps_o = 1e-6,
                                       const conic::SolverOptions& opts = {});

/// Fixed terminal gain of subsystem i.
inline const Mat& fixed_gain(const OfflineResult& res, int i) { return res.Kf[i]; }

}  // namespace dmpc::offline
