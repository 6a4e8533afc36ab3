#include "slsloc/locality_selection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slsloc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Index support_count(const std::vector<ColumnKernel>& kernels) {
  Index n = 0;
  for (const auto& k : kernels) n += static_cast<Index>(k.phi_rows.size());
  return n;
}

}  // namespace

LocalSubmatrixResult local_submatrix(const SubsystemBlock& block, Index n_phi, Index n_x,
                                     double eps, double rank_tol) {
  const auto t0 = Clock::now();
  LocalSubmatrixResult res;
  res.subsystem = block.subsystem;
  res.support = block.support;

  const Vec w = min_norm_solve(block.H, block.k, rank_tol);
  res.residual = block.H.rows() > 0 ? (block.H * w - block.k).lpNorm<Eigen::Infinity>() : 0.0;
  res.feasible = res.residual <= eps;
  if (!res.feasible) {
    res.construct_seconds = seconds_since(t0);
    return res;
  }

  const Mat vr = row_space_basis(block.H, rank_tol);
  Mat proj = -vr * vr.transpose();
  proj.diagonal().array() += 1.0;

  const Index traj = n_phi - n_x;
  const Index s = static_cast<Index>(block.support.size());
  res.J = Mat::Zero(traj, s);
  for (Index a = 0; a < s; ++a) {
    const Index r = block.support[a] % n_phi;
    if (r < n_x) continue;
    res.J.row(r - n_x) += proj.row(a);
  }
  res.construct_seconds = seconds_since(t0);
  return res;
}

std::vector<LocalSubmatrixResult> local_submatrices(const SlsOperators& ops, const IndexSets& idx,
                                                    const SubsystemPartition& partition, double eps,
                                                    double rank_tol) {
  const auto blocks = partition_H_k(ops, idx, partition);
  std::vector<LocalSubmatrixResult> out(blocks.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (Index i = 0; i < static_cast<Index>(blocks.size()); ++i)
    out[i] = local_submatrix(blocks[i], ops.n_phi, ops.n_x, eps, rank_tol);
  return out;
}

CertifyResult assemble_and_certify(const std::vector<LocalSubmatrixResult>& results, Index n_u,
                                   int T) {
  CertifyResult cr;
  cr.rank_target = n_u * T;
  for (const auto& r : results)
    if (!r.feasible) cr.infeasible_subsystems.push_back(r.subsystem);
  if (!cr.infeasible_subsystems.empty()) return cr;

  Index traj = 0, cols = 0;
  for (const auto& r : results) {
    traj = std::max(traj, r.J.rows());
    cols += r.J.cols();
  }
  Mat gram = Mat::Zero(traj, traj);
  for (const auto& r : results) gram.noalias() += r.J * r.J.transpose();
  const RankResult rr = numerical_rank_gram(gram, traj, cols);
  cr.rank = rr.rank;
  cr.rank_tolerance_used = rr.tolerance_used;
  cr.certified = cr.rank == cr.rank_target;
  return cr;
}

CertifyResult assemble_and_certify_reference(const std::vector<LocalSubmatrixResult>& results,
                                             Index n_u, int T, double rank_tol) {
  CertifyResult cr;
  cr.rank_target = n_u * T;
  for (const auto& r : results)
    if (!r.feasible) cr.infeasible_subsystems.push_back(r.subsystem);
  if (!cr.infeasible_subsystems.empty()) return cr;

  Index traj = 0, cols = 0;
  for (const auto& r : results) {
    traj = std::max(traj, r.J.rows());
    cols += r.J.cols();
  }
  Mat J(traj, cols);
  Index c = 0;
  for (const auto& r : results) {
    J.middleCols(c, r.J.cols()) = r.J;
    c += r.J.cols();
  }
  const RankResult rr = numerical_rank(J, rank_tol);
  cr.rank = rr.rank;
  cr.rank_tolerance_used = rr.tolerance_used;
  cr.certified = cr.rank == cr.rank_target;
  return cr;
}

LocalitySelectionReport optimal_locality_size(const LtiNetworkSystem& sys, int T,
                                              const SelectionOptions& opts) {
  if (T < 1) throw std::invalid_argument("optimal_locality_size: need T >= 1");
  validate_system(sys);

  LocalitySelectionReport report;
  const auto graph = build_interconnection_graph(sys);
  report.d_max = opts.d_max.value_or(graph.diameter());

  const auto ops = build_sls_operators(sys, T, /*with_projectors=*/false);
  const Index target = ops.n_u * T;
  const Index traj = ops.traj_rows();

  for (int d = 1; d <= report.d_max; ++d) {
    PerDRecord rec;
    rec.d = d;
    rec.target = target;

    const auto t0 = Clock::now();
    const auto pattern = build_sparsity_pattern(sys, d, T);
    const auto idx = index_sets(pattern);
    const auto kernels = build_column_kernels(ops, idx, sys.partition, opts.parallel);
    rec.construct_wall_seconds = seconds_since(t0);

    std::vector<double> per_subsystem(sys.num_subsystems(), 0.0);
    std::vector<double> worst_residual(sys.num_subsystems(), 0.0);
    for (const auto& k : kernels) {
      per_subsystem[k.subsystem] += k.construct_seconds;
      worst_residual[k.subsystem] = std::max(worst_residual[k.subsystem], k.residual);
    }
    rec.construct_per_subsystem_max_seconds =
        *std::max_element(per_subsystem.begin(), per_subsystem.end());

    for (int i = 0; i < sys.num_subsystems(); ++i)
      if (worst_residual[i] > opts.eps) rec.infeasible_subsystems.push_back(i);
    rec.all_feasible = rec.infeasible_subsystems.empty();

    if (rec.all_feasible) {
      const auto t1 = Clock::now();
      if (opts.gram_rank) {
        const Mat gram = localized_basis_gram(kernels, traj, ops.n_x, Vec::Ones(ops.n_x));
        rec.rank = numerical_rank_gram(gram, traj, support_count(kernels)).rank;
      } else {
        const auto blocks = local_submatrices(ops, idx, sys.partition, opts.eps, opts.rank_tol);
        rec.rank = assemble_and_certify_reference(blocks, ops.n_u, T, opts.rank_tol).rank;
      }
      rec.rank_seconds = seconds_since(t1);
      rec.certified = rec.rank == target;
    }

    report.per_d.push_back(rec);
    if (rec.certified) {
      if (!report.d_optimal) report.d_optimal = d;
      if (!opts.evaluate_all) break;
    }
  }

  if (!report.d_optimal) {
    report.diagnostic = report.d_max < 1
                            ? "empty search range (d_max < 1)"
                            : "no d-local pattern up to d_max certified optimal performance";
  }
  return report;
}

}  // namespace slsloc
