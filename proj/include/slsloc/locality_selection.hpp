#pragma once

#include "slsloc/trajectory_analysis.hpp"

#include <optional>
#include <string>

namespace slsloc {

/// Feasibility and embedded local submatrix for one subsystem. `J` lives in
/// trajectory-row coordinates (n_phi - n_x rows) and is present iff feasible.
struct LocalSubmatrixResult {
  int subsystem = 0;
  bool feasible = false;
  double residual = 0.0;
  Mat J;
  IndexList support;  // global vec indices owned by this block
  double construct_seconds = 0.0;
};

// Subroutine form: w = H_i^+ k_i, infeasible when the max-norm residual
// exceeds eps, else J_i = rows of (X2)_{:,M_i} (x0 = ones) applied to
// I - H_i^+ H_i.
LocalSubmatrixResult local_submatrix(const SubsystemBlock& block, Index n_phi, Index n_x,
                                     double eps, double rank_tol = -1.0);

// Convenience: all subsystems of a pattern at once (used by tests and the
// serial reference path).
std::vector<LocalSubmatrixResult> local_submatrices(const SlsOperators& ops, const IndexSets& idx,
                                                    const SubsystemPartition& partition, double eps,
                                                    double rank_tol = -1.0);

struct CertifyResult {
  Index rank = 0;
  Index rank_target = 0;
  bool certified = false;
  std::vector<int> infeasible_subsystems;
  double rank_tolerance_used = 0.0;
};

// J = [J_1 ... J_N]; certified iff rank(J) == n_u * T. Rank decided on the
// eigenvalues of J J^T, accumulated per subsystem (the projector blocks are
// idempotent, so no dense product is formed). Refuses certification when any
// block is infeasible.
CertifyResult assemble_and_certify(const std::vector<LocalSubmatrixResult>& results, Index n_u,
                                   int T);

// Serial reference: materializes J and takes its SVD. Kept for testing and
// benchmarking against the Gram path.
CertifyResult assemble_and_certify_reference(const std::vector<LocalSubmatrixResult>& results,
                                             Index n_u, int T, double rank_tol = -1.0);

struct PerDRecord {
  int d = 0;
  bool all_feasible = false;
  Index rank = 0;
  Index target = 0;
  bool certified = false;
  std::vector<int> infeasible_subsystems;
  double construct_wall_seconds = 0.0;
  double construct_per_subsystem_max_seconds = 0.0;
  double rank_seconds = 0.0;
};

struct LocalitySelectionReport {
  std::optional<int> d_optimal;
  std::vector<PerDRecord> per_d;
  int d_max = 0;
  std::string x0_mode = "ones";
  std::string diagnostic;
};

struct SelectionOptions {
  double eps = 1e-8;
  double rank_tol = -1.0;
  std::optional<int> d_max;   // default: interconnection graph diameter
  bool evaluate_all = false;  // keep going past the first certifying d
  bool parallel = true;
  bool gram_rank = true;      // false: serial SVD reference for the rank step
};

// Iterates d = 1, 2, ... up to d_max, certifying each d-local pattern via the
// per-subsystem pipeline; returns the smallest certifying d and the full
// per-d trace with construct/rank timings.
LocalitySelectionReport optimal_locality_size(const LtiNetworkSystem& sys, int T,
                                              const SelectionOptions& opts = {});

}  // namespace slsloc
