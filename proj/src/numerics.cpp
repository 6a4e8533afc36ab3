#include "slsloc/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace slsloc {

namespace {

using Svd = Eigen::JacobiSVD<Mat>;  // BDCSVD misbehaves on clustered spectra (NaN deflation)

double pick_tolerance(const Svd& svd, Index rows, Index cols, double tol) {
  if (tol >= 0.0) return tol;
  const double sigma_max = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  return default_rank_tolerance(rows, cols, sigma_max);
}

Index count_above(const Vec& sigma, double tol) {
  Index r = 0;
  while (r < sigma.size() && sigma(r) > tol) ++r;
  return r;
}

}  // namespace

double default_rank_tolerance(Index rows, Index cols, double sigma_max) {
  const double dim = static_cast<double>(std::max(rows, cols));
  return dim * std::numeric_limits<double>::epsilon() * sigma_max;
}

Mat pseudo_inverse(const Mat& m, double tol) {
  if (m.rows() == 0 || m.cols() == 0) return Mat::Zero(m.cols(), m.rows());
  if (!all_finite(m)) throw std::invalid_argument("pseudo_inverse: non-finite input");
  Svd svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sigma = svd.singularValues();
  const double cut = pick_tolerance(svd, m.rows(), m.cols(), tol);
  Vec inv = Vec::Zero(sigma.size());
  for (Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > cut) inv(i) = 1.0 / sigma(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

RankResult numerical_rank(const Mat& m, double tol) {
  RankResult res;
  if (m.rows() == 0 || m.cols() == 0) {
    res.tolerance_used = std::max(tol, 0.0);
    return res;
  }
  if (!all_finite(m)) throw std::invalid_argument("numerical_rank: non-finite input");
  Svd svd(m);
  res.singular_values = svd.singularValues();
  res.tolerance_used = pick_tolerance(svd, m.rows(), m.cols(), tol);
  res.rank = count_above(res.singular_values, res.tolerance_used);
  return res;
}

RankResult numerical_rank_gram(const Mat& gram, Index j_rows, Index j_cols) {
  RankResult res;
  if (gram.rows() == 0) return res;
  Eigen::SelfAdjointEigenSolver<Mat> eig(gram, Eigen::EigenvaluesOnly);
  Vec lambda = eig.eigenvalues().reverse();  // descending
  const double lambda_max = std::max(lambda(0), 0.0);
  const double lambda_tol = default_rank_tolerance(j_rows, j_cols, lambda_max);
  res.singular_values = lambda.cwiseMax(0.0).cwiseSqrt();
  res.tolerance_used = std::sqrt(lambda_tol);
  res.rank = count_above(res.singular_values, res.tolerance_used);
  return res;
}

Vec min_norm_solve(const Mat& m, const Vec& b, double tol) {
  if (m.rows() != b.size()) throw std::invalid_argument("min_norm_solve: dimension mismatch");
  if (m.rows() == 0 || m.cols() == 0) return Vec::Zero(m.cols());
  Svd svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double cut = pick_tolerance(svd, m.rows(), m.cols(), tol);
  // Keep the threshold consistent with numerical_rank rather than Eigen's own
  // default, then let the SVD solve produce the min-norm solution.
  const Vec& sigma = svd.singularValues();
  Vec coeff = svd.matrixU().transpose() * b;
  for (Index i = 0; i < sigma.size(); ++i)
    coeff(i) = sigma(i) > cut ? coeff(i) / sigma(i) : 0.0;
  return svd.matrixV() * coeff;
}

Mat nullspace_basis(const Mat& m, double tol) {
  if (m.cols() == 0) return Mat::Zero(0, 0);
  if (m.rows() == 0) return Mat::Identity(m.cols(), m.cols());
  Svd svd(m, Eigen::ComputeFullV);
  const double cut = pick_tolerance(svd, m.rows(), m.cols(), tol);
  const Index r = count_above(svd.singularValues(), cut);
  return svd.matrixV().rightCols(m.cols() - r);
}

Mat row_space_basis(const Mat& m, double tol) {
  if (m.rows() == 0 || m.cols() == 0) return Mat::Zero(m.cols(), 0);
  Svd svd(m, Eigen::ComputeThinV);
  const double cut = pick_tolerance(svd, m.rows(), m.cols(), tol);
  const Index r = count_above(svd.singularValues(), cut);
  return svd.matrixV().leftCols(r);
}

Mat range_basis(const Mat& m, double tol) {
  if (m.rows() == 0 || m.cols() == 0) return Mat::Zero(m.rows(), 0);
  // Rank-revealing QR is enough here and much cheaper than an SVD on the
  // wide column pools this gets called with.
  Eigen::ColPivHouseholderQR<Mat> qr;
  if (tol >= 0.0) {
    qr.setThreshold(tol);
  }
  qr.compute(m);
  const Index r = qr.rank();
  Mat q = Mat::Identity(m.rows(), r);
  q.applyOnTheLeft(qr.householderQ());
  return q;
}

Mat block_diag(const std::vector<Mat>& blocks) {
  Index rows = 0, cols = 0;
  for (const Mat& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Mat out = Mat::Zero(rows, cols);
  Index r = 0, c = 0;
  for (const Mat& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

}  // namespace slsloc
