#pragma once

#include "slsloc/gridgen.hpp"
#include "slsloc/locality_selection.hpp"
#include "slsloc/sls_operators.hpp"

#include <random>

namespace slsloc::testing {

// Three single-state nodes in a chain, two of them actuated. The worked
// example used throughout the golden tests.
inline LtiNetworkSystem chain3_system() {
  LtiNetworkSystem sys;
  sys.A.resize(3, 3);
  sys.A << 1, 2, 0, 3, 4, 5, 0, 6, 7;
  sys.B.resize(3, 2);
  sys.B << 1, 0, 0, 0, 0, 1;
  sys.partition.num_subsystems = 3;
  sys.partition.state_owner = {0, 1, 2};
  sys.partition.input_owner = {0, 2};
  return sys;
}

inline Mat random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Mat m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

inline Vec random_vector(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

/// Random connected network: n_sub subsystems of 1-2 states, a random
/// spanning tree plus extra edges, dense coupling blocks on edges, and one
/// input per actuated subsystem.
inline LtiNetworkSystem random_network_system(std::uint64_t seed, int n_sub,
                                              double actuation = 0.7) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nstates(1, 2);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<int> state_owner;
  for (int i = 0; i < n_sub; ++i) {
    const int k = nstates(rng);
    for (int s = 0; s < k; ++s) state_owner.push_back(i);
  }
  const Index n_x = static_cast<Index>(state_owner.size());

  // spanning tree + a few extra edges
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < n_sub; ++i)
    edges.emplace_back(static_cast<int>(rng() % static_cast<std::uint64_t>(i)), i);
  for (int i = 0; i < n_sub; ++i)
    for (int j = i + 1; j < n_sub; ++j)
      if (unif(rng) < 0.15) edges.emplace_back(i, j);

  std::vector<IndexList> states(n_sub);
  for (Index s = 0; s < n_x; ++s) states[state_owner[s]].push_back(s);

  Mat A = Mat::Zero(n_x, n_x);
  for (int i = 0; i < n_sub; ++i)
    for (Index s : states[i])
      for (Index t : states[i]) A(s, t) = unif(rng) * 2.0 - 1.0;
  for (const auto& [i, j] : edges) {
    for (Index s : states[i])
      for (Index t : states[j]) {
        A(s, t) = unif(rng) * 2.0 - 1.0;
        A(t, s) = unif(rng) * 2.0 - 1.0;
      }
  }

  std::vector<int> input_owner;
  for (int i = 0; i < n_sub; ++i)
    if (unif(rng) < actuation) input_owner.push_back(i);
  if (input_owner.empty()) input_owner.push_back(static_cast<int>(rng() % n_sub));

  Mat B = Mat::Zero(n_x, static_cast<Index>(input_owner.size()));
  for (Index a = 0; a < B.cols(); ++a) {
    const auto& owned = states[input_owner[a]];
    B(owned[rng() % owned.size()], a) = unif(rng) + 0.5;
  }

  LtiNetworkSystem sys{std::move(A), std::move(B), {state_owner, input_owner, n_sub}};
  validate_system(sys);
  return sys;
}

/// 1D chain of two-state pendula (swing dynamics) with a configurable set of
/// actuated nodes.
inline LtiNetworkSystem pendulum_chain(int n_nodes, const std::vector<int>& actuated,
                                       std::uint64_t seed = 7) {
  SplitRng params(seed, 2);
  const double dt = 0.2;
  const Index n_x = 2 * n_nodes;
  Mat A = Mat::Zero(n_x, n_x);
  std::vector<double> coupling(std::max(0, n_nodes - 1));
  for (auto& k : coupling) k = params.uniform(0.5, 1.0);
  for (int v = 0; v < n_nodes; ++v) {
    const double inv_m = params.uniform(0.0, 2.0);
    const double damp = params.uniform(1.0, 1.5);
    double k_self = 0.0;
    if (v > 0) k_self += coupling[v - 1];
    if (v + 1 < n_nodes) k_self += coupling[v];
    A(2 * v, 2 * v) = 1.0;
    A(2 * v, 2 * v + 1) = dt;
    A(2 * v + 1, 2 * v) = -k_self * inv_m * dt;
    A(2 * v + 1, 2 * v + 1) = 1.0 - damp * inv_m * dt;
    if (v > 0) A(2 * v + 1, 2 * (v - 1)) = coupling[v - 1] * inv_m * dt;
    if (v + 1 < n_nodes) A(2 * v + 1, 2 * (v + 1)) = coupling[v] * inv_m * dt;
  }
  Mat B = Mat::Zero(n_x, static_cast<Index>(actuated.size()));
  std::vector<int> input_owner;
  for (Index a = 0; a < B.cols(); ++a) {
    B(2 * actuated[a] + 1, a) = 1.0;
    input_owner.push_back(actuated[a]);
  }
  std::vector<int> state_owner(n_x);
  for (int v = 0; v < n_nodes; ++v) state_owner[2 * v] = state_owner[2 * v + 1] = v;
  LtiNetworkSystem sys{std::move(A), std::move(B), {state_owner, input_owner, n_nodes}};
  validate_system(sys);
  return sys;
}

/// Single-state nodes with B = I and A supported on a chain or mesh graph
/// (for the T = 1 structural analysis).
inline LtiNetworkSystem t1_identity_system(std::uint64_t seed, int n_nodes, bool mesh) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.2, 1.5);
  Mat A = Mat::Zero(n_nodes, n_nodes);
  for (int i = 0; i < n_nodes; ++i) A(i, i) = unif(rng);
  auto couple = [&](int i, int j) {
    A(i, j) = unif(rng);
    A(j, i) = unif(rng);
  };
  if (mesh) {
    // treat n_nodes as side^2 (callers pass perfect squares)
    const int side = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_nodes)))));
    for (int v = 0; v < n_nodes; ++v) {
      const int r = v / side, c = v % side;
      if (c + 1 < side) couple(v, v + 1);
      if (r + 1 < side) couple(v, v + side);
    }
  } else {
    for (int v = 0; v + 1 < n_nodes; ++v) couple(v, v + 1);
  }
  std::vector<int> owner(n_nodes);
  for (int v = 0; v < n_nodes; ++v) owner[v] = v;
  LtiNetworkSystem sys{std::move(A), Mat::Identity(n_nodes, n_nodes), {owner, owner, n_nodes}};
  validate_system(sys);
  return sys;
}

// Sample a feasible trajectory of the unconstrained set by drawing a random
// closed-loop map from the affine solution family of the dynamics constraint.
inline Vec sample_trajectory_unconstrained(const SlsOperators& ops, const Vec& x0,
                                           std::mt19937_64& rng) {
  const Mat lambda = random_matrix(rng, ops.n_phi, ops.n_x);
  Mat rhs = Mat::Zero(ops.zab.rows(), ops.n_x);
  rhs.topRows(ops.n_x) = Mat::Identity(ops.n_x, ops.n_x);
  const Mat phi = ops.zab_pinv * rhs + (lambda - ops.zab_pinv * (ops.zab * lambda));
  return phi.bottomRows(ops.traj_rows()) * x0;
}

// Sample a feasible localized trajectory by drawing random coefficients in
// the per-column kernels of the support-restricted constraint.
inline Vec sample_trajectory_localized(const SlsOperators& ops,
                                       const std::vector<ColumnKernel>& kernels, const Vec& x0,
                                       std::mt19937_64& rng) {
  Vec y = Vec::Zero(ops.traj_rows());
  for (const auto& k : kernels) {
    if (x0(k.column) == 0.0) continue;
    const Vec gamma = random_vector(rng, k.projector.cols());
    const Vec phi_col = k.w + k.projector * gamma;
    for (Index a = 0; a < static_cast<Index>(k.phi_rows.size()); ++a)
      if (k.phi_rows[a] >= ops.n_x) y(k.phi_rows[a] - ops.n_x) += x0(k.column) * phi_col(a);
  }
  return y;
}

// Affine dimension of a cloud of sampled trajectories.
inline Index sampled_dimension(const std::vector<Vec>& samples) {
  if (samples.size() < 2) return 0;
  Mat diffs(samples[0].size(), static_cast<Index>(samples.size()) - 1);
  for (std::size_t i = 1; i < samples.size(); ++i)
    diffs.col(static_cast<Index>(i) - 1) = samples[i] - samples[0];
  return numerical_rank(diffs).rank;
}

}  // namespace slsloc::testing
