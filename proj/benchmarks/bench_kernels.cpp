// Compares the OpenMP per-column kernel pipeline against the serial
// reference (dense J + SVD rank) on generated mesh systems, checking that
// both report the same rank along the way.

#include "slsloc/gridgen.hpp"
#include "slsloc/locality_selection.hpp"

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace slsloc;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

LtiNetworkSystem make_system(int n, std::uint64_t seed_start) {
  for (std::uint64_t seed = seed_start;; ++seed) {
    GridGenConfig cfg;
    cfg.n = n;
    cfg.seed = seed;
    try {
      return generate_mesh_system(cfg);
    } catch (const std::runtime_error&) {
    }
  }
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif
  std::printf("%4s %4s | %14s %14s %8s | %12s %12s %8s | %s\n", "n", "T", "kernels_par_s",
              "kernels_ser_s", "speedup", "rank_gram_s", "rank_svd_s", "speedup", "agree");

  struct Point {
    int n, T;
  };
  const Point points[] = {{3, 5}, {4, 5}, {4, 10}, {5, 10}, {5, 15}};

  for (const auto& pt : points) {
    const auto sys = make_system(pt.n, 0);
    const auto ops = build_sls_operators(sys, pt.T, /*with_projectors=*/false);
    const auto idx = index_sets(build_sparsity_pattern(sys, 1, pt.T));

    auto t0 = Clock::now();
    const auto kernels_par = build_column_kernels(ops, idx, sys.partition, /*parallel=*/true);
    const double par_s = seconds_since(t0);

    t0 = Clock::now();
    const auto kernels_ser = build_column_kernels(ops, idx, sys.partition, /*parallel=*/false);
    const double ser_s = seconds_since(t0);

    t0 = Clock::now();
    const Mat gram = localized_basis_gram(kernels_par, ops.traj_rows(), ops.n_x,
                                          Vec::Ones(ops.n_x));
    Index n_m = 0;
    for (const auto& k : kernels_par) n_m += static_cast<Index>(k.phi_rows.size());
    const Index rank_gram = numerical_rank_gram(gram, ops.traj_rows(), n_m).rank;
    const double gram_s = seconds_since(t0);

    t0 = Clock::now();
    const auto blocks = local_submatrices(ops, idx, sys.partition, 1e-8);
    const auto ref = assemble_and_certify_reference(blocks, ops.n_u, pt.T);
    const double svd_s = seconds_since(t0);

    std::printf("%4d %4d | %14.4f %14.4f %8.2f | %12.4f %12.4f %8.2f | %s\n", pt.n, pt.T, par_s,
                ser_s, ser_s / par_s, gram_s, svd_s, svd_s / gram_s,
                rank_gram == ref.rank ? "yes" : "NO");
  }
  return 0;
}
