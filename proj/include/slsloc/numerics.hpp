#pragma once

#include "slsloc/types.hpp"

namespace slsloc {

/// Outcome of a numerical rank decision. `rank` counts the singular values
/// strictly above `tolerance_used`; `singular_values` is sorted descending.
struct RankResult {
  Index rank = 0;
  Vec singular_values;
  double tolerance_used = 0.0;
};

// Standard tolerance rule: max(rows, cols) * eps * sigma_max. Callers may
// override by passing an explicit nonnegative tolerance; a negative value
// selects this default everywhere below.
double default_rank_tolerance(Index rows, Index cols, double sigma_max);

// Moore-Penrose pseudoinverse via SVD. A zero-dimension input yields the
// transposed-shape empty matrix.
Mat pseudo_inverse(const Mat& m, double tol = -1.0);

RankResult numerical_rank(const Mat& m, double tol = -1.0);

// Rank of a matrix J given only its Gram matrix G = J * J^T, decided on the
// eigenvalues of G with threshold max(j_rows, j_cols) * eps * lambda_max.
// Reported singular values are sqrt(lambda) so RankResult semantics match
// numerical_rank. Intended for wide J where forming the SVD is the bottleneck.
RankResult numerical_rank_gram(const Mat& gram, Index j_rows, Index j_cols);

// Minimum-norm least-squares solution of M x = b.
Vec min_norm_solve(const Mat& m, const Vec& b, double tol = -1.0);

// Orthonormal basis of the nullspace of M (columns). Empty (cols x 0) when M
// has full column rank.
Mat nullspace_basis(const Mat& m, double tol = -1.0);

// Orthonormal basis of the row space of M (columns of V kept at rank).
Mat row_space_basis(const Mat& m, double tol = -1.0);

// Orthonormal basis of the column space of M (rank-revealing QR). A
// nonnegative tol is interpreted relative to the largest pivot.
Mat range_basis(const Mat& m, double tol = -1.0);

Mat block_diag(const std::vector<Mat>& blocks);

}  // namespace slsloc
