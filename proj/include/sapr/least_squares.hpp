#pragma once

#include <functional>

#include "sapr/linalg.hpp"

namespace sapr {

using ResidualFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<Matrix(const Vector&)>;

struct LeastSquaresOptions {
  int max_iterations = 500;
  double initial_damping = 1e-3;
  int max_backtracks = 8;
  double cost_tol = 0.0;        // stop once ||r||^2 <= cost_tol
  double relative_tol = 1e-14;  // stop once an accepted step improves the cost by less than this fraction
  double gradient_tol = 1e-300;
  double step_tol = 1e-15;
  double fd_step = 1e-6;        // relative central-difference step when no Jacobian is given
};

struct LeastSquaresResult {
  Vector params;
  Vector residual;
  double cost = 0.0;  // ||residual||^2
  int iterations = 0;
  bool converged = false;
};

/// Central differences, step h * max(1, |p_i|).
Matrix central_difference_jacobian(const ResidualFn& residual, const Vector& params, double h);

/// Levenberg-style damped Gauss-Newton with step-halving backtracking.
LeastSquaresResult damped_gauss_newton(const ResidualFn& residual, const Vector& start,
                                       const LeastSquaresOptions& options,
                                       const JacobianFn& jacobian = {});

} // namespace sapr
