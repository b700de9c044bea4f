#include "sapr/least_squares.hpp"

#include <algorithm>
#include <cmath>

namespace sapr {

Matrix central_difference_jacobian(const ResidualFn& residual, const Vector& params, double h) {
  Vector p = params;
  Matrix jac;
  for (Index i = 0; i < p.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(params[i]));
    p[i] = params[i] + step;
    const Vector plus = residual(p);
    p[i] = params[i] - step;
    const Vector minus = residual(p);
    p[i] = params[i];
    if (i == 0) jac.resize(plus.size(), p.size());
    jac.col(i) = (plus - minus) / (2.0 * step);
  }
  return jac;
}

LeastSquaresResult damped_gauss_newton(const ResidualFn& residual, const Vector& start,
                                       const LeastSquaresOptions& options,
                                       const JacobianFn& jacobian) {
  LeastSquaresResult result;
  result.params = start;
  result.residual = residual(start);
  result.cost = result.residual.squaredNorm();
  if (!std::isfinite(result.cost)) return result;

  double damping = options.initial_damping;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;
    if (result.cost <= options.cost_tol) {
      result.converged = true;
      return result;
    }
    const Matrix jac = jacobian ? jacobian(result.params)
                                : central_difference_jacobian(residual, result.params, options.fd_step);
    const Vector gradient = jac.transpose() * result.residual;
    if (gradient.cwiseAbs().maxCoeff() <= options.gradient_tol) {
      result.converged = true;
      return result;
    }
    Matrix normal = jac.transpose() * jac;
    const Vector diag = normal.diagonal().cwiseMax(1e-12 * std::max(1.0, normal.diagonal().maxCoeff()));

    bool accepted = false;
    // escalate damping until a descent step is found
    for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
      Matrix damped = normal;
      damped.diagonal() += damping * diag;
      const Vector step = damped.ldlt().solve(-gradient);
      if (!step.allFinite()) {
        damping *= 10.0;
        continue;
      }
      double scale = 1.0;
      for (int bt = 0; bt <= options.max_backtracks; ++bt, scale *= 0.5) {
        const Vector trial = result.params + scale * step;
        Vector r = residual(trial);
        const double cost = r.squaredNorm();
        if (std::isfinite(cost) && cost < result.cost) {
          const double improvement = (result.cost - cost) / std::max(result.cost, 1e-300);
          const double step_norm = scale * step.norm();
          result.params = trial;
          result.residual = std::move(r);
          result.cost = cost;
          accepted = true;
          damping = std::max(damping / 3.0, 1e-12);
          if (improvement < options.relative_tol ||
              step_norm <= options.step_tol * (result.params.norm() + options.step_tol)) {
            result.converged = true;
            return result;
          }
          break;
        }
      }
      if (!accepted) damping *= 10.0;
    }
    if (!accepted) {
      // no descent direction at any damping: stationary to working precision
      result.converged = true;
      return result;
    }
  }
  return result;
}

} // namespace sapr
