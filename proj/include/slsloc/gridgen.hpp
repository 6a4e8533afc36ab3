#pragma once

#include "slsloc/model.hpp"

#include <cstdint>
#include <optional>
#include <random>

namespace slsloc {

/// Configuration for the random networked-pendula benchmark: an n x n mesh
/// whose neighbor pairs are coupled with probability edge_prob, two states
/// (phase, frequency) per node, and one actuator on a random subset of nodes.
struct GridGenConfig {
  int n = 5;
  double edge_prob = 0.4;
  double actuation_density = 1.0;
  double dt = 0.2;
  double inv_inertia_min = 0.0, inv_inertia_max = 2.0;
  double damping_min = 1.0, damping_max = 1.5;
  double coupling_min = 0.5, coupling_max = 1.0;
  std::uint64_t seed = 0;
  std::optional<double> target_spectral_radius;
  int max_resamples = 10000;
};

void validate_config(const GridGenConfig& cfg);

// Deterministic given cfg.seed; the graph, parameter, and actuation draws use
// separate substreams in a fixed order, and uniform doubles are produced by a
// fixed 53-bit mapping so results are identical across platforms. The mesh
// graph is resampled whole until connected (throws std::runtime_error after
// max_resamples failures).
LtiNetworkSystem generate_mesh_system(const GridGenConfig& cfg);

double spectral_radius(const Mat& A);

// A <- A * (rho_target / rho(A)); throws std::invalid_argument when rho(A) == 0.
LtiNetworkSystem scale_spectral_radius(const LtiNetworkSystem& sys, double rho_target);

/// Substream RNG: 64-bit Mersenne Twister seeded through splitmix64 on
/// (seed, stream tag). Uniform doubles use the top 53 bits of the raw draw,
/// avoiding the implementation-defined std::uniform_real_distribution.
class SplitRng {
 public:
  SplitRng(std::uint64_t seed, std::uint64_t stream);
  std::uint64_t next() { return mt_(); }
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  // Fisher-Yates prefix: k distinct values from 0..n-1, returned sorted.
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::mt19937_64 mt_;
};

}  // namespace slsloc
