#ifndef MJP_TYPES_HPP
#define MJP_TYPES_HPP

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <limits>

namespace mjp {

using Real = double;
using Index = Eigen::Index;

using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<Real, Eigen::RowMajor>;

inline constexpr int kMaxActions = 16;

/// Probability vector over a global action set (no heap allocation).
using ActionVector =
    Eigen::Matrix<Real, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxActions>;

inline constexpr Real kInf = std::numeric_limits<Real>::infinity();

}  // namespace mjp

#endif  // MJP_TYPES_HPP
