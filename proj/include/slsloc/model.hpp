#pragma once

#include "slsloc/types.hpp"

#include <vector>

namespace slsloc {

/// Assignment of global state/input indices to subsystems (0-based ids).
/// Every state and input has exactly one owner; each subsystem owns at least
/// one state, while inputs may be absent (unactuated subsystem).
struct SubsystemPartition {
  std::vector<int> state_owner;
  std::vector<int> input_owner;
  int num_subsystems = 0;

  std::vector<IndexList> states_by_subsystem() const;
  std::vector<IndexList> inputs_by_subsystem() const;
};

SubsystemPartition trivial_partition(Index n_x, Index n_u);

/// Discrete-time LTI network x(t+1) = A x(t) + B u(t) with a subsystem
/// partition inducing the interconnection topology.
struct LtiNetworkSystem {
  Mat A;
  Mat B;
  SubsystemPartition partition;

  Index n_x() const { return A.rows(); }
  Index n_u() const { return B.cols(); }
  int num_subsystems() const { return partition.num_subsystems; }
};

// Throws std::invalid_argument on inconsistent dimensions, non-finite
// entries, or an invalid ownership map.
void validate_system(const LtiNetworkSystem& sys);

/// Undirected interconnection graph on subsystems; adjacency stored as sorted
/// neighbor lists without self-loops.
struct InterconnectionGraph {
  int n = 0;
  std::vector<std::vector<int>> neighbors;

  bool has_edge(int i, int j) const;
  Index num_edges() const;
  // BFS hop distances from i; -1 marks unreachable vertices.
  std::vector<int> distances_from(int i) const;
  bool is_connected() const;
  // Largest finite pairwise distance. Returns n for a disconnected graph so
  // that d-local iteration saturates at the all-reachable pattern.
  int diameter() const;
};

// Edge (i, j), i != j, iff any entry of the (i, j) state block of A or of the
// (state block i, inputs owned by j) block of B is nonzero. Exact zero test.
InterconnectionGraph build_interconnection_graph(const LtiNetworkSystem& sys);

// Subsystems within graph distance d of i (includes i). Sorted ascending.
std::vector<int> d_local_neighborhood(const InterconnectionGraph& g, int i, int d);

/// Boolean locality mask over the stacked closed-loop map Phi. The mask has
/// n_phi = n_x (T+1) + n_u T rows and n_x columns; true marks an entry allowed
/// to be nonzero. Time-invariant: identical across time blocks.
struct SparsityPattern {
  BoolMask mask;
  int horizon = 0;
  Index n_x = 0;
  Index n_u = 0;

  Index n_phi() const { return mask.rows(); }
  Index count_allowed() const;
};

// Owner of each Phi row: T+1 state blocks then T input blocks.
std::vector<int> phi_row_owner(const LtiNetworkSystem& sys, int T);

// Mask entry (r, c) true iff owner(row r) lies in the d-local neighborhood of
// owner(state column c).
SparsityPattern build_sparsity_pattern(const LtiNetworkSystem& sys, int d, int T);

// All entries allowed (no communication constraint).
SparsityPattern full_sparsity_pattern(const LtiNetworkSystem& sys, int T);

// Pattern from arbitrary per-subsystem communication sets: comm_sets[i] lists
// the subsystems whose state columns row-owner i may populate. Each set must
// contain i itself.
SparsityPattern sparsity_pattern_from_neighbor_sets(const LtiNetworkSystem& sys,
                                                    const std::vector<std::vector<int>>& comm_sets,
                                                    int T);

/// Column-major vectorization index sets for a pattern. `support` indexes the
/// full Phi (allowed-nonzero entries); `constrained` indexes Phi_2 (Phi minus
/// its leading n_x rows) and lists entries forced to zero. Both 0-based,
/// ascending.
struct IndexSets {
  IndexList support;
  IndexList constrained;
  Index n_phi = 0;
  Index n_x = 0;
};

IndexSets index_sets(const SparsityPattern& p);

}  // namespace slsloc
