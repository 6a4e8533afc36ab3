#include "slsloc/model.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>

namespace slsloc {

std::vector<IndexList> SubsystemPartition::states_by_subsystem() const {
  std::vector<IndexList> out(num_subsystems);
  for (Index s = 0; s < static_cast<Index>(state_owner.size()); ++s)
    out[state_owner[s]].push_back(s);
  return out;
}

std::vector<IndexList> SubsystemPartition::inputs_by_subsystem() const {
  std::vector<IndexList> out(num_subsystems);
  for (Index a = 0; a < static_cast<Index>(input_owner.size()); ++a)
    out[input_owner[a]].push_back(a);
  return out;
}

SubsystemPartition trivial_partition(Index n_x, Index n_u) {
  SubsystemPartition p;
  p.num_subsystems = 1;
  p.state_owner.assign(n_x, 0);
  p.input_owner.assign(n_u, 0);
  return p;
}

void validate_system(const LtiNetworkSystem& sys) {
  if (sys.A.rows() != sys.A.cols()) throw std::invalid_argument("system: A must be square");
  if (sys.B.rows() != sys.A.rows()) throw std::invalid_argument("system: B row count mismatch");
  if (!all_finite(sys.A) || !all_finite(sys.B))
    throw std::invalid_argument("system: non-finite entries");
  const auto& p = sys.partition;
  if (p.num_subsystems <= 0) throw std::invalid_argument("system: no subsystems");
  if (static_cast<Index>(p.state_owner.size()) != sys.n_x())
    throw std::invalid_argument("system: state_owner length mismatch");
  if (static_cast<Index>(p.input_owner.size()) != sys.n_u())
    throw std::invalid_argument("system: input_owner length mismatch");
  std::vector<bool> has_state(p.num_subsystems, false);
  for (int o : p.state_owner) {
    if (o < 0 || o >= p.num_subsystems) throw std::invalid_argument("system: state owner out of range");
    has_state[o] = true;
  }
  for (int o : p.input_owner)
    if (o < 0 || o >= p.num_subsystems) throw std::invalid_argument("system: input owner out of range");
  for (int i = 0; i < p.num_subsystems; ++i)
    if (!has_state[i]) throw std::invalid_argument("system: subsystem owns no state");
}

bool InterconnectionGraph::has_edge(int i, int j) const {
  const auto& nb = neighbors[i];
  return std::binary_search(nb.begin(), nb.end(), j);
}

Index InterconnectionGraph::num_edges() const {
  Index deg = 0;
  for (const auto& nb : neighbors) deg += static_cast<Index>(nb.size());
  return deg / 2;
}

std::vector<int> InterconnectionGraph::distances_from(int i) const {
  std::vector<int> dist(n, -1);
  std::deque<int> queue{i};
  dist[i] = 0;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int w : neighbors[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

bool InterconnectionGraph::is_connected() const {
  if (n == 0) return true;
  auto dist = distances_from(0);
  return std::all_of(dist.begin(), dist.end(), [](int d) { return d >= 0; });
}

int InterconnectionGraph::diameter() const {
  int diam = 0;
  for (int i = 0; i < n; ++i) {
    for (int d : distances_from(i)) {
      if (d < 0) return n;
      diam = std::max(diam, d);
    }
  }
  return diam;
}

InterconnectionGraph build_interconnection_graph(const LtiNetworkSystem& sys) {
  validate_system(sys);
  const int n = sys.num_subsystems();
  const auto states = sys.partition.states_by_subsystem();
  const auto inputs = sys.partition.inputs_by_subsystem();
  std::vector<std::set<int>> adj(n);
  auto connect = [&](int i, int j) {
    if (i == j) return;
    adj[i].insert(j);
    adj[j].insert(i);
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      bool coupled = false;
      for (Index s : states[i]) {
        for (Index t : states[j])
          if (sys.A(s, t) != 0.0) { coupled = true; break; }
        if (coupled) break;
        for (Index a : inputs[j])
          if (sys.B(s, a) != 0.0) { coupled = true; break; }
        if (coupled) break;
      }
      if (coupled) connect(i, j);
    }
  }
  InterconnectionGraph g;
  g.n = n;
  g.neighbors.resize(n);
  for (int i = 0; i < n; ++i) g.neighbors[i].assign(adj[i].begin(), adj[i].end());
  return g;
}

std::vector<int> d_local_neighborhood(const InterconnectionGraph& g, int i, int d) {
  if (i < 0 || i >= g.n) throw std::invalid_argument("d_local_neighborhood: vertex out of range");
  auto dist = g.distances_from(i);
  std::vector<int> out;
  for (int v = 0; v < g.n; ++v)
    if (dist[v] >= 0 && dist[v] <= d) out.push_back(v);
  return out;
}

Index SparsityPattern::count_allowed() const {
  return static_cast<Index>(mask.count());
}

std::vector<int> phi_row_owner(const LtiNetworkSystem& sys, int T) {
  const Index n_x = sys.n_x(), n_u = sys.n_u();
  std::vector<int> owner;
  owner.reserve(n_x * (T + 1) + n_u * T);
  for (int t = 0; t <= T; ++t)
    for (Index s = 0; s < n_x; ++s) owner.push_back(sys.partition.state_owner[s]);
  for (int t = 0; t < T; ++t)
    for (Index a = 0; a < n_u; ++a) owner.push_back(sys.partition.input_owner[a]);
  return owner;
}

namespace {

SparsityPattern pattern_from_allowed(const LtiNetworkSystem& sys, int T,
                                     const std::vector<std::vector<bool>>& allowed) {
  const Index n_x = sys.n_x(), n_u = sys.n_u();
  const Index n_phi = n_x * (T + 1) + n_u * T;
  const auto row_owner = phi_row_owner(sys, T);
  SparsityPattern p;
  p.horizon = T;
  p.n_x = n_x;
  p.n_u = n_u;
  p.mask = BoolMask::Constant(n_phi, n_x, false);
  for (Index r = 0; r < n_phi; ++r)
    for (Index c = 0; c < n_x; ++c)
      p.mask(r, c) = allowed[row_owner[r]][sys.partition.state_owner[c]];
  return p;
}

}  // namespace

SparsityPattern build_sparsity_pattern(const LtiNetworkSystem& sys, int d, int T) {
  if (d < 0 || T < 1) throw std::invalid_argument("build_sparsity_pattern: need d >= 0, T >= 1");
  const auto g = build_interconnection_graph(sys);
  std::vector<std::vector<bool>> allowed(g.n, std::vector<bool>(g.n, false));
  for (int i = 0; i < g.n; ++i)
    for (int j : d_local_neighborhood(g, i, d)) allowed[i][j] = true;
  return pattern_from_allowed(sys, T, allowed);
}

SparsityPattern full_sparsity_pattern(const LtiNetworkSystem& sys, int T) {
  if (T < 1) throw std::invalid_argument("full_sparsity_pattern: need T >= 1");
  validate_system(sys);
  const int n = sys.num_subsystems();
  std::vector<std::vector<bool>> allowed(n, std::vector<bool>(n, true));
  return pattern_from_allowed(sys, T, allowed);
}

SparsityPattern sparsity_pattern_from_neighbor_sets(const LtiNetworkSystem& sys,
                                                    const std::vector<std::vector<int>>& comm_sets,
                                                    int T) {
  if (T < 1) throw std::invalid_argument("sparsity_pattern_from_neighbor_sets: need T >= 1");
  validate_system(sys);
  const int n = sys.num_subsystems();
  if (static_cast<int>(comm_sets.size()) != n)
    throw std::invalid_argument("sparsity_pattern_from_neighbor_sets: one set per subsystem required");
  std::vector<std::vector<bool>> allowed(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) {
    bool self = false;
    for (int j : comm_sets[i]) {
      if (j < 0 || j >= n) throw std::invalid_argument("sparsity_pattern_from_neighbor_sets: id out of range");
      allowed[i][j] = true;
      self |= (j == i);
    }
    if (!self) throw std::invalid_argument("sparsity_pattern_from_neighbor_sets: set must contain owner");
  }
  return pattern_from_allowed(sys, T, allowed);
}

IndexSets index_sets(const SparsityPattern& p) {
  IndexSets idx;
  idx.n_phi = p.n_phi();
  idx.n_x = p.n_x;
  const Index traj_rows = idx.n_phi - idx.n_x;
  for (Index c = 0; c < p.n_x; ++c) {
    for (Index r = 0; r < idx.n_phi; ++r)
      if (p.mask(r, c)) idx.support.push_back(c * idx.n_phi + r);
    for (Index r = 0; r < traj_rows; ++r)
      if (!p.mask(idx.n_x + r, c)) idx.constrained.push_back(c * traj_rows + r);
  }
  return idx;
}

}  // namespace slsloc
