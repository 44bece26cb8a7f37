#pragma once

#include <Eigen/Dense>

namespace si {

// Row-major throughout: one sample per contiguous row, which is what the
// vector kernels consume.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using SquareMat = Eigen::MatrixXd;  // column-major fine for small dense algebra

}  // namespace si
