#pragma once

#include <optional>
#include <string>

#include "dmpc/offline.hpp"
#include "dmpc/terminal.hpp"

namespace dmpc::ocp {

struct MissingOffline : Error {
  using Error::Error;
};

enum class SchemeKind { DstVar, DstFxd, DstAdp, DstRlx };

SchemeKind scheme_from_string(const std::string& name);
std::string to_string(SchemeKind k);

struct Scheme {
  SchemeKind kind = SchemeKind::DstFxd;
  int horizon = 2;
  double eps1 = 0.99;
  double alpha_min = 1e-8;
  conic::SolverOptions solver;
};

/// One solved receding-horizon step: trajectories, artificial equilibrium,
/// recovered terminal ingredients and diagnostics.
struct Plan {
  Mat X;   // n x (T+1)
  Mat U;   // m x T
  Vec x_e;
  Vec u_e;
  terminal::TerminalIngredients ingredients;
  double objective = 0.0;  // solver epigraph objective
  double cost = 0.0;       // quadratic cost re-evaluated at the solution
  conic::SolveResult diagnostics;
};

struct StepResult {
  conic::Status status = conic::Status::NumericalFailure;
  std::optional<Plan> plan;
  bool feasible() const { return status == conic::Status::Optimal; }
};

/// Assembled program plus the variable indexing needed for extraction.
struct Assembled {
  conic::Program prog;
  int T = 0;
  std::vector<std::vector<int>> x;  // per time step, n indices
  std::vector<std::vector<int>> u;  // per time step, m indices
  std::vector<int> a;               // alpha_i^{1/2}
  std::vector<int> c;               // global center (empty for origin-centered scheme)
  std::vector<int> xe, ue;          // only for the fixed-gain scheme
  std::vector<std::vector<int>> v3;
  std::vector<std::vector<int>> v4;  // affine image (variable gain) or d_i (fixed gain)
  std::vector<conic::Program::SymHandle> v5;
  std::vector<std::vector<conic::Program::SymHandle>> T_blocks;
};

Assembled assemble(const Scheme& scheme, const model::PartitionedSystem& sys,
                   const model::PolytopicConstraints& con, const model::CostWeights& w,
                   const offline::OfflineResult& off, const Vec& x0, const Vec& x_r);

StepResult solve_step(const Scheme& scheme, const model::PartitionedSystem& sys,
                      const model::PolytopicConstraints& con, const model::CostWeights& w,
                      const offline::OfflineResult& off, const Vec& x0, const Vec& x_r);

/// Equilibrium of a solved plan, with residual and interiority re-checked.
model::EquilibriumPoint equilibrium_of(const Plan& plan, const Scheme& scheme,
                                       const model::PartitionedSystem& sys,
                                       const model::PolytopicConstraints& con);

}  // namespace dmpc::ocp
