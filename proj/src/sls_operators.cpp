#include "slsloc/sls_operators.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slsloc {

Mat build_zab(const Mat& A, const Mat& B, int T) {
  if (T < 1) throw std::invalid_argument("build_zab: need T >= 1");
  if (A.rows() != A.cols() || B.rows() != A.rows())
    throw std::invalid_argument("build_zab: dimension mismatch");
  const Index n_x = A.rows(), n_u = B.cols();
  const Index rows = n_x * (T + 1);
  const Index n_phi = rows + n_u * T;
  Mat zab = Mat::Zero(rows, n_phi);
  for (int t = 0; t <= T; ++t) {
    zab.block(t * n_x, t * n_x, n_x, n_x) = Mat::Identity(n_x, n_x);
    if (t >= 1) {
      zab.block(t * n_x, (t - 1) * n_x, n_x, n_x) = -A;
      zab.block(t * n_x, rows + (t - 1) * n_u, n_x, n_u) = -B;
    }
  }
  return zab;
}

SlsOperators build_sls_operators(const Mat& A, const Mat& B, int T, bool with_projectors) {
  SlsOperators ops;
  ops.horizon = T;
  ops.n_x = A.rows();
  ops.n_u = B.cols();
  ops.zab = build_zab(A, B, T);
  ops.n_phi = ops.zab.cols();
  if (!with_projectors) return ops;

  // Single SVD feeds both the pseudoinverse and the nullspace projector.
  Eigen::JacobiSVD<Mat> svd(ops.zab, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const Vec& sigma = svd.singularValues();
  const double cut = default_rank_tolerance(ops.zab.rows(), ops.zab.cols(),
                                            sigma.size() > 0 ? sigma(0) : 0.0);
  Vec inv = Vec::Zero(sigma.size());
  Index rank = 0;
  for (Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > cut) {
      inv(i) = 1.0 / sigma(i);
      ++rank;
    }
  }
  ops.zab_pinv =
      svd.matrixV().leftCols(sigma.size()) * inv.asDiagonal() * svd.matrixU().transpose();

  // zp: trajectory rows of pinv * [I; 0] == first n_x columns.
  ops.zp = ops.zab_pinv.bottomRows(ops.traj_rows()).leftCols(ops.n_x);

  // zh: trajectory rows of V_n V_n^T (the nullspace columns come out cleaner
  // than accumulating I - V_r V_r^T).
  const Mat vn = svd.matrixV().rightCols(ops.n_phi - rank);
  ops.zh = vn.bottomRows(ops.traj_rows()) * vn.transpose();
  return ops;
}

SlsOperators build_sls_operators(const LtiNetworkSystem& sys, int T, bool with_projectors) {
  validate_system(sys);
  return build_sls_operators(sys.A, sys.B, T, with_projectors);
}

Mat build_augmented_state(const Vec& x0, Index n_phi) {
  Mat X = Mat::Zero(n_phi, x0.size() * n_phi);
  for (Index j = 0; j < x0.size(); ++j)
    X.block(0, j * n_phi, n_phi, n_phi) = x0(j) * Mat::Identity(n_phi, n_phi);
  return X;
}

Mat build_augmented_state_tail(const Vec& x0, Index n_phi, Index n_x) {
  return build_augmented_state(x0, n_phi).bottomRows(n_phi - n_x);
}

std::pair<Mat, Vec> build_F_g(const SlsOperators& ops, const IndexSets& idx) {
  const Index traj = ops.traj_rows();
  const Index n_l = static_cast<Index>(idx.constrained.size());
  Mat F = Mat::Zero(n_l, ops.n_x * ops.n_phi);
  Vec g = Vec::Zero(n_l);
  for (Index i = 0; i < n_l; ++i) {
    const Index m = idx.constrained[i];
    const Index col = m / traj;  // state column of Phi_2
    const Index row = m % traj;
    F.block(i, col * ops.n_phi, 1, ops.n_phi) = ops.zh.row(row);
    g(i) = -ops.zp(row, col);
  }
  return {std::move(F), std::move(g)};
}

std::pair<Mat, Vec> build_H_k(const SlsOperators& ops, const IndexSets& idx) {
  const Index block_rows = ops.zab.rows();
  const Index n_m = static_cast<Index>(idx.support.size());
  Mat H = Mat::Zero(ops.n_x * block_rows, n_m);
  Vec k = Vec::Zero(ops.n_x * block_rows);
  for (Index c = 0; c < n_m; ++c) {
    const Index m = idx.support[c];
    const Index col = m / ops.n_phi;
    const Index row = m % ops.n_phi;
    H.block(col * block_rows, c, block_rows, 1) = ops.zab.col(row);
  }
  for (Index j = 0; j < ops.n_x; ++j) k(j * block_rows + j) = 1.0;
  return {std::move(H), std::move(k)};
}

std::vector<ColumnConstraint> column_constraints(const SlsOperators& ops, const IndexSets& idx) {
  std::vector<ColumnConstraint> cols(ops.n_x);
  for (Index j = 0; j < ops.n_x; ++j) cols[j].column = j;
  for (Index m : idx.support) cols[m / ops.n_phi].rows.push_back(m % ops.n_phi);
  for (auto& cc : cols) {
    const Index s = static_cast<Index>(cc.rows.size());
    cc.H = Mat::Zero(ops.zab.rows(), s);
    for (Index a = 0; a < s; ++a) cc.H.col(a) = ops.zab.col(cc.rows[a]);
    cc.k = Vec::Zero(ops.zab.rows());
    cc.k(cc.column) = 1.0;
  }
  return cols;
}

std::vector<SubsystemBlock> partition_H_k(const SlsOperators& ops, const IndexSets& idx,
                                          const SubsystemPartition& partition) {
  const auto cols = column_constraints(ops, idx);
  std::vector<SubsystemBlock> blocks(partition.num_subsystems);
  for (int i = 0; i < partition.num_subsystems; ++i) blocks[i].subsystem = i;

  std::vector<std::vector<const ColumnConstraint*>> grouped(partition.num_subsystems);
  for (const auto& cc : cols) grouped[partition.state_owner[cc.column]].push_back(&cc);

  for (int i = 0; i < partition.num_subsystems; ++i) {
    auto& blk = blocks[i];
    Index rows = 0, colcount = 0;
    for (const auto* cc : grouped[i]) {
      rows += cc->H.rows();
      colcount += cc->H.cols();
    }
    blk.H = Mat::Zero(rows, colcount);
    blk.k = Vec::Zero(rows);
    Index r = 0, c = 0;
    for (const auto* cc : grouped[i]) {
      blk.H.block(r, c, cc->H.rows(), cc->H.cols()) = cc->H;
      blk.k.segment(r, cc->k.size()) = cc->k;
      blk.columns.push_back(cc->column);
      for (Index row : cc->rows) blk.support.push_back(cc->column * ops.n_phi + row);
      r += cc->H.rows();
      c += cc->H.cols();
    }
  }
  return blocks;
}


namespace {

ColumnKernel make_column_kernel(const ColumnConstraint& cc, int subsystem) {
  const auto t0 = std::chrono::steady_clock::now();
  ColumnKernel k;
  k.column = cc.column;
  k.subsystem = subsystem;
  k.phi_rows = cc.rows;
  const Index s = static_cast<Index>(cc.rows.size());

  // Trim rows of H that are identically zero: they leave the row space (and
  // hence the projector and the least-squares solution) unchanged, but a
  // dropped row with a nonzero right-hand side still counts in the residual.
  IndexList kept;
  double dropped_resid = 0.0;
  for (Index r = 0; r < cc.H.rows(); ++r) {
    if ((cc.H.row(r).array() != 0.0).any())
      kept.push_back(r);
    else
      dropped_resid = std::max(dropped_resid, std::abs(cc.k(r)));
  }
  Mat Ht(static_cast<Index>(kept.size()), s);
  Vec kt(static_cast<Index>(kept.size()));
  for (Index i = 0; i < static_cast<Index>(kept.size()); ++i) {
    Ht.row(i) = cc.H.row(kept[i]);
    kt(i) = cc.k(kept[i]);
  }

  if (s == 0 || Ht.rows() == 0) {
    k.projector = Mat::Identity(s, s);
    k.w = Vec::Zero(s);
    k.residual = std::max(dropped_resid, 0.0);
    k.construct_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return k;
  }

  Eigen::CompleteOrthogonalDecomposition<Mat> cod(Ht);
  k.w = cod.solve(kt);
  k.residual = std::max(dropped_resid, (Ht * k.w - kt).lpNorm<Eigen::Infinity>());

  // Nullspace of Ht: with Ht P = Q [T 0; 0 0] Z, the permuted trailing
  // columns of Z' span it; the projector I - Ht^+ Ht is their outer product.
  const Index rank = cod.rank();
  const Mat z = cod.matrixZ();
  const Mat null_basis = cod.colsPermutation() * z.bottomRows(s - rank).transpose();
  k.projector.noalias() = null_basis * null_basis.transpose();
  k.construct_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return k;
}

}  // namespace

std::vector<ColumnKernel> build_column_kernels(const SlsOperators& ops, const IndexSets& idx,
                                               const SubsystemPartition& partition,
                                               bool parallel) {
  const auto cols = column_constraints(ops, idx);
  std::vector<ColumnKernel> kernels(cols.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (Index j = 0; j < static_cast<Index>(cols.size()); ++j)
    kernels[j] = make_column_kernel(cols[j], partition.state_owner[cols[j].column]);
  return kernels;
}

Mat localized_basis_gram(const std::vector<ColumnKernel>& kernels, Index traj_rows, Index n_x,
                         const Vec& x0) {
  Mat gram = Mat::Zero(traj_rows, traj_rows);
  for (const auto& k : kernels) {
    const double s2 = x0(k.column) * x0(k.column);
    if (s2 == 0.0) continue;
    const Index s = static_cast<Index>(k.phi_rows.size());
    for (Index a = 0; a < s; ++a) {
      if (k.phi_rows[a] < n_x) continue;
      const Index ra = k.phi_rows[a] - n_x;
      for (Index b = 0; b < s; ++b) {
        if (k.phi_rows[b] < n_x) continue;
        gram(ra, k.phi_rows[b] - n_x) += s2 * k.projector(a, b);
      }
    }
  }
  return gram;
}

}  // namespace slsloc
