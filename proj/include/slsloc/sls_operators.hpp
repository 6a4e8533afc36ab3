#pragma once

#include "slsloc/model.hpp"
#include "slsloc/numerics.hpp"

#include <utility>
#include <vector>

namespace slsloc {

/// Horizon-indexed operators of the closed-loop trajectory parametrization.
/// zab has full row rank n_x (T+1); zh spans the feasible directions of the
/// trajectory rows (rank n_u T); zp is the particular-solution map.
struct SlsOperators {
  int horizon = 0;
  Index n_x = 0;
  Index n_u = 0;
  Index n_phi = 0;
  Mat zab;       // n_x (T+1)  x  n_phi
  Mat zab_pinv;  // n_phi      x  n_x (T+1)
  Mat zp;        // n_phi-n_x  x  n_x
  Mat zh;        // n_phi-n_x  x  n_phi

  Index traj_rows() const { return n_phi - n_x; }
};

// [I - Z Ahat, -Z Bhat]: identity on the state-block diagonal, -A on the
// first block sub-diagonal, -B shifted one block down in the input columns.
Mat build_zab(const Mat& A, const Mat& B, int T);

// Builds zab and derives zab_pinv, zp, zh from a single SVD so the rank
// structure of the three operators is numerically consistent. Pass
// with_projectors = false to skip the SVD when only zab is needed (the
// locality-first pipeline).
SlsOperators build_sls_operators(const LtiNetworkSystem& sys, int T, bool with_projectors = true);
SlsOperators build_sls_operators(const Mat& A, const Mat& B, int T, bool with_projectors = true);

// Augmented state X(x0) = [(x0)_1 I ... (x0)_nx I] with identity blocks of
// size n_phi; satisfies Lambda * x0 = X * vec(Lambda) for column-major vec.
Mat build_augmented_state(const Vec& x0, Index n_phi);

// X with its first n_x rows dropped (the trajectory rows).
Mat build_augmented_state_tail(const Vec& x0, Index n_phi, Index n_x);

// Rows `constrained` of blkdiag(zh, ..., zh) and g = -(vec zp) restricted to
// the same indices.
std::pair<Mat, Vec> build_F_g(const SlsOperators& ops, const IndexSets& idx);

// Columns `support` of blkdiag(zab, ..., zab) and k = vec([I; 0]).
std::pair<Mat, Vec> build_H_k(const SlsOperators& ops, const IndexSets& idx);

/// One state column of the support-restricted dynamics constraint:
/// H_col = zab(:, rows), k_col = column `column` of [I; 0].
struct ColumnConstraint {
  Index column = 0;    // state column of Phi
  IndexList rows;      // support rows r within the column (0-based, ascending)
  Mat H;
  Vec k;
};

std::vector<ColumnConstraint> column_constraints(const SlsOperators& ops, const IndexSets& idx);

/// Per-subsystem slice of (H, k): block-diagonal over the subsystem's state
/// columns, with the owned global support indices.
struct SubsystemBlock {
  int subsystem = 0;
  Mat H;
  Vec k;
  IndexList support;          // global vec indices into Phi, ascending per column
  IndexList columns;          // state columns grouped into this block
};

// Groups Phi columns by owning subsystem. blkdiag of the returned H blocks
// reproduces build_H_k's H up to the column/row permutation implied by the
// grouping (exactly equal when each subsystem's states are contiguous).
std::vector<SubsystemBlock> partition_H_k(const SlsOperators& ops, const IndexSets& idx,
                                          const SubsystemPartition& partition);

/// Compact per-state-column kernel of the support-restricted constraint: the
/// min-norm solution of H_col z = k_col, its max-norm residual, and the
/// orthonormal-nullspace projector I - H_col^+ H_col, all in support
/// coordinates with the row map back into Phi.
struct ColumnKernel {
  Index column = 0;
  int subsystem = 0;
  IndexList phi_rows;  // support rows within the column (0-based over n_phi)
  Mat projector;       // s x s
  Vec w;               // s
  double residual = 0.0;
  double construct_seconds = 0.0;
};

// One rank-revealing complete orthogonal decomposition per state column;
// rows of zab that are identically zero on the support are dropped first
// (they cannot constrain the solution; the residual bookkeeping accounts for
// them exactly). Runs the column loop under OpenMP when `parallel` is set;
// results are deterministic regardless of scheduling.
std::vector<ColumnKernel> build_column_kernels(const SlsOperators& ops, const IndexSets& idx,
                                               const SubsystemPartition& partition,
                                               bool parallel = true);

// Gram matrix of the localized trajectory basis (X2)_{:,M} (I - H^+ H): the
// per-column projector blocks scatter-accumulate as sum_j x0_j^2 S_j P_j S_j'
// since the projectors are idempotent. Deterministic column-order reduction.
Mat localized_basis_gram(const std::vector<ColumnKernel>& kernels, Index traj_rows, Index n_x,
                         const Vec& x0);

}  // namespace slsloc
