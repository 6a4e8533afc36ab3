#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace slsloc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;
using BoolMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

inline bool all_finite(const Mat& m) { return m.allFinite(); }
inline bool all_finite(const Vec& v) { return v.allFinite(); }

inline Vec ones_x0(Index n_x) { return Vec::Ones(n_x); }

}  // namespace slsloc
