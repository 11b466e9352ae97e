#pragma once

#include <Eigen/Dense>

namespace localprop {

// Batches are row-major in the logical sense: one sample per row.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace localprop
