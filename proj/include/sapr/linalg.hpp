#pragma once

#include <Eigen/Dense>

namespace sapr {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Length-N coefficient vector in block (real Fourier / irreducible) coordinates.
using Signal = Vector;

/// Length-R vector of nonnegative block energies.
using MeasurementVector = Vector;

} // namespace sapr
