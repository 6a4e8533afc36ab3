#pragma once

#include "slsloc/locality_selection.hpp"
#include "slsloc/qp.hpp"

#include <map>
#include <optional>

namespace slsloc {

/// Per-coordinate closed interval bounds; +-inf marks an unconstrained side.
struct Bounds {
  Vec lo;
  Vec hi;
};

Bounds unbounded(Index n);

/// Diagonal LQR objective with box constraints over a T-step horizon.
/// Weights are nonnegative; every bound interval contains the origin.
struct MpcSpec {
  int horizon = 1;
  Vec q_state;
  Vec r_input;
  Vec q_terminal;  // weight on x_T; defaults to q_state when empty
  Bounds state_bounds;
  Bounds input_bounds;
  std::optional<SparsityPattern> locality;
  QpOptions qp;
  double feas_eps = 1e-8;  // dynamics/locality intersection tolerance
};

void validate_mpc_spec(const LtiNetworkSystem& sys, const MpcSpec& spec);

enum class SolveStatus { optimal, max_iters, infeasible };

const char* to_string(SolveStatus s);

/// Solution over the trajectory y = (x_1..x_T, u_0..u_{T-1}). `cost` is
/// y' W y for the diagonal stage weights (the constant x_0 stage is excluded).
struct MpcSolution {
  Vec trajectory;
  double cost = 0.0;
  SolveStatus status = SolveStatus::infeasible;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;

  Vec state_at(int t, Index n_x) const;  // t in 1..T
  Vec first_input(Index n_x, Index n_u, int T) const;
};

/// Global MPC: QP over (x, u) with dynamics equalities and box bounds.
class GlobalMpc {
 public:
  GlobalMpc(const LtiNetworkSystem& sys, const MpcSpec& spec);
  MpcSolution solve(const Vec& x0);

 private:
  const LtiNetworkSystem sys_;
  MpcSpec spec_;
  Mat aeq_;
  Vec weights_, lo_, hi_;
  std::optional<QpResult> warm_;
};

/// Localized MPC: QP over the support entries of Phi. The dynamics equality
/// H (vec Phi)_M = k is eliminated through the per-column nullspace kernels;
/// the remaining variables are compressed onto an orthonormal basis of the
/// reachable trajectory directions, which depends on x0 only through its
/// zero pattern and is cached accordingly.
class LocalizedMpc {
 public:
  LocalizedMpc(const LtiNetworkSystem& sys, const MpcSpec& spec);
  MpcSolution solve(const Vec& x0);

  bool dynamics_feasible() const { return feasible_; }
  double feasibility_residual() const { return residual_; }

 private:
  const Mat& basis_for(const Vec& x0);

  const LtiNetworkSystem sys_;
  MpcSpec spec_;
  SlsOperators ops_;
  Vec weights_, lo_, hi_;
  bool feasible_ = false;
  double residual_ = 0.0;
  // Per state column: embedded nullspace image and particular contribution.
  struct ColumnImage {
    IndexList traj_rows;  // one per kernel support entry that reaches y
    Mat directions;       // rows matching traj_rows
    Vec particular;       // same row layout
  };
  std::vector<ColumnImage> images_;
  std::map<std::vector<bool>, Mat> basis_cache_;
  std::optional<QpResult> warm_;
  const Mat* warm_basis_ = nullptr;
};

MpcSolution solve_global(const LtiNetworkSystem& sys, const MpcSpec& spec, const Vec& x0);
MpcSolution solve_localized(const LtiNetworkSystem& sys, const MpcSpec& spec, const Vec& x0);

enum class ControllerKind { global, localized };

/// Closed-loop rollout: solve the T-horizon problem at each real timestep,
/// apply the first input, propagate exactly (no disturbance).
struct SimTrace {
  Mat states;       // (completed_steps + 1) x n_x
  Mat inputs;       // completed_steps x n_u
  Vec step_costs;   // realized x'Qx + u'Ru per step
  Vec cum_costs;
  Vec solve_costs;  // predicted trajectory cost of each solve
  SolveStatus status = SolveStatus::optimal;
  int completed_steps = 0;

  double realized_cost() const { return cum_costs.size() > 0 ? cum_costs(cum_costs.size() - 1) : 0.0; }
};

SimTrace rolling_horizon_sim(const LtiNetworkSystem& sys, const MpcSpec& spec, const Vec& x0,
                             int steps, ControllerKind controller);

// Trajectory-space stage weights [q (T-1 times), q_term, r (T times)].
Vec trajectory_weights(const LtiNetworkSystem& sys, const MpcSpec& spec);

}  // namespace slsloc
