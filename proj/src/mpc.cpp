#include "slsloc/mpc.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace slsloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SolveStatus from_qp(QpStatus s) {
  switch (s) {
    case QpStatus::optimal: return SolveStatus::optimal;
    case QpStatus::infeasible: return SolveStatus::infeasible;
    case QpStatus::max_iters: return SolveStatus::max_iters;
  }
  return SolveStatus::max_iters;
}

// Box bounds over the trajectory coordinates.
std::pair<Vec, Vec> trajectory_bounds(const LtiNetworkSystem& sys, const MpcSpec& spec) {
  const Index n_x = sys.n_x(), n_u = sys.n_u();
  const int T = spec.horizon;
  Vec lo(n_x * T + n_u * T), hi(lo.size());
  for (int t = 0; t < T; ++t) {
    lo.segment(t * n_x, n_x) = spec.state_bounds.lo;
    hi.segment(t * n_x, n_x) = spec.state_bounds.hi;
  }
  for (int t = 0; t < T; ++t) {
    lo.segment(n_x * T + t * n_u, n_u) = spec.input_bounds.lo;
    hi.segment(n_x * T + t * n_u, n_u) = spec.input_bounds.hi;
  }
  return {std::move(lo), std::move(hi)};
}

void check_bounds(const Bounds& b, Index n, const char* what) {
  if (b.lo.size() != n || b.hi.size() != n)
    throw std::invalid_argument(std::string("mpc spec: ") + what + " bound length mismatch");
  for (Index i = 0; i < n; ++i) {
    if (!(b.lo(i) <= b.hi(i)))
      throw std::invalid_argument(std::string("mpc spec: ") + what + " bounds not ordered");
    if (b.lo(i) > 0.0 || b.hi(i) < 0.0)
      throw std::invalid_argument(std::string("mpc spec: ") + what + " bounds must contain 0");
  }
}

}  // namespace

Bounds unbounded(Index n) {
  return {Vec::Constant(n, -kInf), Vec::Constant(n, kInf)};
}

void validate_mpc_spec(const LtiNetworkSystem& sys, const MpcSpec& spec) {
  if (spec.horizon < 1) throw std::invalid_argument("mpc spec: horizon >= 1 required");
  if (spec.q_state.size() != sys.n_x() || spec.r_input.size() != sys.n_u())
    throw std::invalid_argument("mpc spec: weight length mismatch");
  if (spec.q_terminal.size() != 0 && spec.q_terminal.size() != sys.n_x())
    throw std::invalid_argument("mpc spec: terminal weight length mismatch");
  if (spec.q_state.minCoeff() < 0.0 || (spec.r_input.size() > 0 && spec.r_input.minCoeff() < 0.0))
    throw std::invalid_argument("mpc spec: weights must be nonnegative");
  check_bounds(spec.state_bounds, sys.n_x(), "state");
  check_bounds(spec.input_bounds, sys.n_u(), "input");
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "?";
}

Vec MpcSolution::state_at(int t, Index n_x) const {
  return trajectory.segment((t - 1) * n_x, n_x);
}

Vec MpcSolution::first_input(Index n_x, Index n_u, int T) const {
  return trajectory.segment(n_x * T, n_u);
}

Vec trajectory_weights(const LtiNetworkSystem& sys, const MpcSpec& spec) {
  const Index n_x = sys.n_x(), n_u = sys.n_u();
  const int T = spec.horizon;
  const Vec& q_term = spec.q_terminal.size() > 0 ? spec.q_terminal : spec.q_state;
  Vec w(n_x * T + n_u * T);
  for (int t = 0; t < T - 1; ++t) w.segment(t * n_x, n_x) = spec.q_state;
  w.segment((T - 1) * n_x, n_x) = q_term;
  for (int t = 0; t < T; ++t) w.segment(n_x * T + t * n_u, n_u) = spec.r_input;
  return w;
}

GlobalMpc::GlobalMpc(const LtiNetworkSystem& sys, const MpcSpec& spec) : sys_(sys), spec_(spec) {
  validate_system(sys);
  validate_mpc_spec(sys, spec);
  const Index n_x = sys.n_x(), n_u = sys.n_u();
  const int T = spec.horizon;
  const Index dim = n_x * T + n_u * T;

  aeq_ = Mat::Zero(n_x * T, dim);
  for (int t = 0; t < T; ++t) {
    aeq_.block(t * n_x, t * n_x, n_x, n_x) = Mat::Identity(n_x, n_x);
    if (t >= 1) aeq_.block(t * n_x, (t - 1) * n_x, n_x, n_x) = -sys.A;
    aeq_.block(t * n_x, n_x * T + t * n_u, n_x, n_u) = -sys.B;
  }
  weights_ = trajectory_weights(sys, spec);
  std::tie(lo_, hi_) = trajectory_bounds(sys, spec);
}

MpcSolution GlobalMpc::solve(const Vec& x0) {
  const Index n_x = sys_.n_x();
  const int T = spec_.horizon;
  const Index dim = aeq_.cols();

  QpProblem prob;
  prob.P = Mat::Zero(dim, dim);
  prob.P.diagonal() = 2.0 * weights_;
  prob.q = Vec::Zero(dim);
  prob.A = Mat::Zero(aeq_.rows() + dim, dim);
  prob.A.topRows(aeq_.rows()) = aeq_;
  prob.A.bottomRows(dim) = Mat::Identity(dim, dim);
  Vec beq = Vec::Zero(n_x * T);
  beq.head(n_x) = sys_.A * x0;
  prob.l = Vec(prob.A.rows());
  prob.u = Vec(prob.A.rows());
  prob.l << beq, lo_;
  prob.u << beq, hi_;

  const Vec* xw = warm_ ? &warm_->x : nullptr;
  const Vec* yw = warm_ ? &warm_->y : nullptr;
  QpResult qr = solve_qp(prob, spec_.qp, xw, yw);
  if (qr.status == QpStatus::optimal) warm_ = qr;

  MpcSolution sol;
  sol.trajectory = qr.x;
  sol.cost = qr.x.dot(weights_.cwiseProduct(qr.x));
  sol.status = from_qp(qr.status);
  sol.primal_residual = qr.primal_residual;
  sol.dual_residual = qr.dual_residual;
  sol.iterations = qr.iterations;
  return sol;
}

LocalizedMpc::LocalizedMpc(const LtiNetworkSystem& sys, const MpcSpec& spec)
    : sys_(sys), spec_(spec) {
  validate_system(sys);
  validate_mpc_spec(sys, spec);
  if (!spec.locality) throw std::invalid_argument("localized mpc: locality pattern required");

  ops_ = build_sls_operators(sys, spec.horizon, /*with_projectors=*/false);
  const auto idx = index_sets(*spec.locality);
  const auto kernels = build_column_kernels(ops_, idx, sys.partition);

  residual_ = 0.0;
  for (const auto& k : kernels) residual_ = std::max(residual_, k.residual);
  feasible_ = residual_ <= spec.feas_eps;

  images_.resize(ops_.n_x);
  for (const auto& k : kernels) {
    ColumnImage img;
    IndexList keep;
    for (Index a = 0; a < static_cast<Index>(k.phi_rows.size()); ++a)
      if (k.phi_rows[a] >= ops_.n_x) keep.push_back(a);
    img.traj_rows.reserve(keep.size());
    img.directions = Mat(static_cast<Index>(keep.size()), k.projector.cols());
    img.particular = Vec(static_cast<Index>(keep.size()));
    for (Index i = 0; i < static_cast<Index>(keep.size()); ++i) {
      img.traj_rows.push_back(k.phi_rows[keep[i]] - ops_.n_x);
      img.directions.row(i) = k.projector.row(keep[i]);
      img.particular(i) = k.w(keep[i]);
    }
    images_[k.column] = std::move(img);
  }

  weights_ = trajectory_weights(sys, spec);
  std::tie(lo_, hi_) = trajectory_bounds(sys, spec);
}

const Mat& LocalizedMpc::basis_for(const Vec& x0) {
  std::vector<bool> pattern(ops_.n_x);
  for (Index j = 0; j < ops_.n_x; ++j) pattern[j] = x0(j) != 0.0;
  auto it = basis_cache_.find(pattern);
  if (it != basis_cache_.end()) return it->second;

  // Reachable directions: the span of the embedded nullspace images over the
  // nonzero coordinates of x0; scaling the blocks does not change the span.
  Index cols = 0;
  for (Index j = 0; j < ops_.n_x; ++j)
    if (pattern[j]) cols += images_[j].directions.cols();
  Mat pool = Mat::Zero(ops_.traj_rows(), cols);
  Index base = 0;
  for (Index j = 0; j < ops_.n_x; ++j) {
    if (!pattern[j]) continue;
    const auto& img = images_[j];
    for (Index i = 0; i < static_cast<Index>(img.traj_rows.size()); ++i)
      pool.row(img.traj_rows[i]).segment(base, img.directions.cols()) = img.directions.row(i);
    base += img.directions.cols();
  }
  return basis_cache_.emplace(std::move(pattern), range_basis(pool)).first->second;
}

MpcSolution LocalizedMpc::solve(const Vec& x0) {
  MpcSolution sol;
  if (x0.size() != ops_.n_x) throw std::invalid_argument("localized mpc: x0 length mismatch");
  if (!feasible_) {
    sol.status = SolveStatus::infeasible;
    return sol;
  }

  Vec y_p = Vec::Zero(ops_.traj_rows());
  for (Index j = 0; j < ops_.n_x; ++j) {
    if (x0(j) == 0.0) continue;
    const auto& img = images_[j];
    for (Index i = 0; i < static_cast<Index>(img.traj_rows.size()); ++i)
      y_p(img.traj_rows[i]) += x0(j) * img.particular(i);
  }

  const Mat& V = basis_for(x0);
  if (V.cols() == 0) {
    sol.trajectory = y_p;
    sol.cost = y_p.dot(weights_.cwiseProduct(y_p));
    const bool ok = (y_p.array() >= lo_.array() - 1e-9).all() &&
                    (y_p.array() <= hi_.array() + 1e-9).all();
    sol.status = ok ? SolveStatus::optimal : SolveStatus::infeasible;
    return sol;
  }

  QpProblem prob;
  const Mat wv = weights_.asDiagonal() * V;
  prob.P = 2.0 * V.transpose() * wv;
  prob.q = 2.0 * (wv.transpose() * y_p);
  prob.A = V;
  prob.l = lo_ - y_p;
  prob.u = hi_ - y_p;

  const bool can_warm = warm_ && warm_basis_ == &V;
  QpResult qr = solve_qp(prob, spec_.qp, can_warm ? &warm_->x : nullptr,
                         can_warm ? &warm_->y : nullptr);
  if (qr.status == QpStatus::optimal) {
    warm_ = qr;
    warm_basis_ = &V;
  }

  sol.trajectory = y_p + V * qr.x;
  sol.cost = sol.trajectory.dot(weights_.cwiseProduct(sol.trajectory));
  sol.status = from_qp(qr.status);
  sol.primal_residual = qr.primal_residual;
  sol.dual_residual = qr.dual_residual;
  sol.iterations = qr.iterations;
  return sol;
}

MpcSolution solve_global(const LtiNetworkSystem& sys, const MpcSpec& spec, const Vec& x0) {
  return GlobalMpc(sys, spec).solve(x0);
}

MpcSolution solve_localized(const LtiNetworkSystem& sys, const MpcSpec& spec, const Vec& x0) {
  return LocalizedMpc(sys, spec).solve(x0);
}

SimTrace rolling_horizon_sim(const LtiNetworkSystem& sys, const MpcSpec& spec, const Vec& x0,
                             int steps, ControllerKind controller) {
  if (steps < 1) throw std::invalid_argument("rolling_horizon_sim: steps >= 1");
  const Index n_x = sys.n_x(), n_u = sys.n_u();
  const int T = spec.horizon;

  std::optional<GlobalMpc> global;
  std::optional<LocalizedMpc> localized;
  if (controller == ControllerKind::global)
    global.emplace(sys, spec);
  else
    localized.emplace(sys, spec);

  SimTrace trace;
  trace.states = Mat::Zero(steps + 1, n_x);
  trace.inputs = Mat::Zero(steps, n_u);
  trace.step_costs = Vec::Zero(steps);
  trace.cum_costs = Vec::Zero(steps);
  trace.solve_costs = Vec::Zero(steps);
  trace.states.row(0) = x0.transpose();

  Vec x = x0;
  double cum = 0.0;
  for (int tau = 0; tau < steps; ++tau) {
    MpcSolution sol = global ? global->solve(x) : localized->solve(x);
    if (sol.status != SolveStatus::optimal) {
      trace.status = sol.status;
      break;
    }
    const Vec u = sol.first_input(n_x, n_u, T);
    trace.inputs.row(tau) = u.transpose();
    trace.solve_costs(tau) = sol.cost;
    const double stage = x.dot(spec.q_state.cwiseProduct(x)) + u.dot(spec.r_input.cwiseProduct(u));
    cum += stage;
    trace.step_costs(tau) = stage;
    trace.cum_costs(tau) = cum;
    x = sys.A * x + sys.B * u;
    trace.states.row(tau + 1) = x.transpose();
    trace.completed_steps = tau + 1;
  }

  if (trace.completed_steps < steps) {
    trace.states.conservativeResize(trace.completed_steps + 1, Eigen::NoChange);
    trace.inputs.conservativeResize(trace.completed_steps, Eigen::NoChange);
    trace.step_costs.conservativeResize(trace.completed_steps);
    trace.cum_costs.conservativeResize(trace.completed_steps);
    trace.solve_costs.conservativeResize(trace.completed_steps);
  }
  return trace;
}

}  // namespace slsloc
