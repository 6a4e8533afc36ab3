#include "slsloc/gridgen.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace slsloc {

namespace {

std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Substream tags; the draw order within each stream is part of the format.
constexpr std::uint64_t kGraphStream = 1;
constexpr std::uint64_t kParamStream = 2;
constexpr std::uint64_t kActuationStream = 3;

struct Edge {
  int a, b;
};

// Canonical mesh neighbor pairs: for each node in row-major order, its right
// neighbor then its down neighbor.
std::vector<Edge> mesh_edges(int n) {
  std::vector<Edge> edges;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const int v = r * n + c;
      if (c + 1 < n) edges.push_back({v, v + 1});
      if (r + 1 < n) edges.push_back({v, v + n});
    }
  }
  return edges;
}

bool connected(int n_nodes, const std::vector<Edge>& edges, const std::vector<bool>& present) {
  std::vector<std::vector<int>> adj(n_nodes);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!present[e]) continue;
    adj[edges[e].a].push_back(edges[e].b);
    adj[edges[e].b].push_back(edges[e].a);
  }
  std::vector<bool> seen(n_nodes, false);
  std::vector<int> stack{0};
  seen[0] = true;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n_nodes;
}

}  // namespace

SplitRng::SplitRng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (stream * 0xD6E8FEB86659FD93ull);
  std::uint64_t init = splitmix64(s);
  mt_.seed(init);
}

double SplitRng::uniform() {
  return static_cast<double>(mt_() >> 11) * 0x1.0p-53;
}

double SplitRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::vector<int> SplitRng::sample_without_replacement(int n, int k) {
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(mt_() % static_cast<std::uint64_t>(n - i));
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> out(pool.begin(), pool.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

void validate_config(const GridGenConfig& cfg) {
  if (cfg.n < 1) throw std::invalid_argument("gridgen: n >= 1 required");
  if (cfg.edge_prob < 0.0 || cfg.edge_prob > 1.0)
    throw std::invalid_argument("gridgen: edge_prob in [0,1]");
  if (cfg.actuation_density < 0.0 || cfg.actuation_density > 1.0)
    throw std::invalid_argument("gridgen: actuation_density in [0,1]");
  if (cfg.dt <= 0.0) throw std::invalid_argument("gridgen: dt > 0 required");
  if (cfg.inv_inertia_min > cfg.inv_inertia_max || cfg.damping_min > cfg.damping_max ||
      cfg.coupling_min > cfg.coupling_max)
    throw std::invalid_argument("gridgen: parameter ranges must be ordered");
}

LtiNetworkSystem generate_mesh_system(const GridGenConfig& cfg) {
  validate_config(cfg);
  const int n_nodes = cfg.n * cfg.n;
  const auto edges = mesh_edges(cfg.n);

  // Graph stream: i.i.d. edge draws, whole-graph resample until connected.
  SplitRng graph_rng(cfg.seed, kGraphStream);
  std::vector<bool> present(edges.size(), false);
  bool ok = false;
  for (int attempt = 0; attempt < cfg.max_resamples; ++attempt) {
    for (std::size_t e = 0; e < edges.size(); ++e) present[e] = graph_rng.uniform() < cfg.edge_prob;
    if (connected(n_nodes, edges, present)) {
      ok = true;
      break;
    }
  }
  if (!ok)
    throw std::runtime_error("gridgen: no connected graph within " +
                             std::to_string(cfg.max_resamples) + " resamples");

  // Parameter stream: per-node inverse inertia and damping in node order,
  // then one shared coupling per present edge in canonical edge order.
  SplitRng param_rng(cfg.seed, kParamStream);
  Vec inv_inertia(n_nodes), damping(n_nodes);
  for (int v = 0; v < n_nodes; ++v) {
    inv_inertia(v) = param_rng.uniform(cfg.inv_inertia_min, cfg.inv_inertia_max);
    damping(v) = param_rng.uniform(cfg.damping_min, cfg.damping_max);
  }
  std::vector<double> coupling(edges.size(), 0.0);
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (present[e]) coupling[e] = param_rng.uniform(cfg.coupling_min, cfg.coupling_max);

  // Actuation stream.
  const int n_act = std::min(n_nodes, static_cast<int>(std::lround(cfg.actuation_density * n_nodes)));
  SplitRng act_rng(cfg.seed, kActuationStream);
  const std::vector<int> actuated = act_rng.sample_without_replacement(n_nodes, n_act);

  // Swing dynamics: states (theta, omega) per node.
  const Index n_x = 2 * n_nodes;
  Mat A = Mat::Zero(n_x, n_x);
  std::vector<double> k_self(n_nodes, 0.0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!present[e]) continue;
    k_self[edges[e].a] += coupling[e];
    k_self[edges[e].b] += coupling[e];
  }
  for (int v = 0; v < n_nodes; ++v) {
    const Index r = 2 * v;
    A(r, r) = 1.0;
    A(r, r + 1) = cfg.dt;
    A(r + 1, r) = -k_self[v] * inv_inertia(v) * cfg.dt;
    A(r + 1, r + 1) = 1.0 - damping(v) * inv_inertia(v) * cfg.dt;
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!present[e]) continue;
    const int a = edges[e].a, b = edges[e].b;
    A(2 * a + 1, 2 * b) = coupling[e] * inv_inertia(a) * cfg.dt;
    A(2 * b + 1, 2 * a) = coupling[e] * inv_inertia(b) * cfg.dt;
  }

  Mat B = Mat::Zero(n_x, n_act);
  SubsystemPartition part;
  part.num_subsystems = n_nodes;
  part.state_owner.resize(n_x);
  for (int v = 0; v < n_nodes; ++v) {
    part.state_owner[2 * v] = v;
    part.state_owner[2 * v + 1] = v;
  }
  part.input_owner.resize(n_act);
  for (int i = 0; i < n_act; ++i) {
    B(2 * actuated[i] + 1, i) = 1.0;
    part.input_owner[i] = actuated[i];
  }

  LtiNetworkSystem sys{std::move(A), std::move(B), std::move(part)};
  if (cfg.target_spectral_radius) sys = scale_spectral_radius(sys, *cfg.target_spectral_radius);
  validate_system(sys);
  return sys;
}

double spectral_radius(const Mat& A) {
  if (A.rows() == 0) return 0.0;
  Eigen::EigenSolver<Mat> eig(A, /*computeEigenvectors=*/false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

LtiNetworkSystem scale_spectral_radius(const LtiNetworkSystem& sys, double rho_target) {
  const double rho = spectral_radius(sys.A);
  if (rho <= 0.0) throw std::invalid_argument("scale_spectral_radius: rho(A) == 0");
  LtiNetworkSystem out = sys;
  out.A *= rho_target / rho;
  return out;
}

}  // namespace slsloc
