#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace ellab {

using Vec = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;
using Mat = Eigen::MatrixXd;
using Mat2 = Eigen::Matrix2d;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

using NodeMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2>;
using TriMatrix = Eigen::Matrix<int, Eigen::Dynamic, 3>;
using SegMatrix = Eigen::Matrix<int, Eigen::Dynamic, 2>;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, 1>;

}  // namespace ellab
