#include <cmath>
#include <limits>

#include "sapr/error.hpp"
#include "sapr/injectivity.hpp"

namespace sapr {
namespace {

// GL: d c_k / d w_j = 2 (<x,w_j> x - <y,w_j> y) for rows j of block k.
Matrix gl_constraint_jacobian(const Signal& x, const Signal& y, const RowMatrix& a,
                              const BlockStructure& blocks) {
  const Index n = a.rows();
  const Vector ax = a * x;
  const Vector ay = a * y;
  Matrix jac = Matrix::Zero(blocks.block_count(), n * n);
  for (Index b = 0; b < blocks.block_count(); ++b)
    for (Index j = blocks.offset(b); j < blocks.offset(b) + blocks.block_dim(b); ++j)
      jac.block(b, j * n, 1, n) = (2.0 * (ax[j] * x - ay[j] * y)).transpose();
  return jac;
}

// SO: tangent A * Omega with Omega = E_pq - E_qp, p < q.
Matrix so_constraint_jacobian(const Signal& x, const Signal& y, const RowMatrix& a,
                              const BlockStructure& blocks) {
  const Index n = a.rows();
  const Vector ax = a * x;
  const Vector ay = a * y;
  Matrix jac = Matrix::Zero(blocks.block_count(), n * (n - 1) / 2);
  Index col = 0;
  for (Index p = 0; p < n; ++p) {
    for (Index q = p + 1; q < n; ++q, ++col) {
      // A * Omega * v = v_q A_{:,p} - v_p A_{:,q}
      for (Index b = 0; b < blocks.block_count(); ++b) {
        double acc = 0.0;
        for (Index j = blocks.offset(b); j < blocks.offset(b) + blocks.block_dim(b); ++j) {
          const double dx = x[q] * a(j, p) - x[p] * a(j, q);
          const double dy = y[q] * a(j, p) - y[p] * a(j, q);
          acc += ax[j] * dx - ay[j] * dy;
        }
        jac(b, col) = 2.0 * acc;
      }
    }
  }
  return jac;
}

RowMatrix skew_from_vector(const Vector& v, Index n) {
  RowMatrix omega = RowMatrix::Zero(n, n);
  Index col = 0;
  for (Index p = 0; p < n; ++p)
    for (Index q = p + 1; q < n; ++q, ++col) {
      omega(p, q) = v[col];
      omega(q, p) = -v[col];
    }
  return omega;
}

// polar retraction, det kept at +1
RowMatrix orthonormalize(const RowMatrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix u = svd.matrixU();
  const Matrix v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(u.cols() - 1) *= -1.0;
  return u * v.transpose();
}

} // namespace

Vector fiber_constraints(const Signal& x, const Signal& y, const RowMatrix& a,
                         const BlockStructure& blocks) {
  const Vector ax = a * x;
  const Vector ay = a * y;
  Vector c = Vector::Zero(blocks.block_count());
  for (Index b = 0; b < blocks.block_count(); ++b)
    for (Index j = blocks.offset(b); j < blocks.offset(b) + blocks.block_dim(b); ++j)
      c[b] += ax[j] * ax[j] - ay[j] * ay[j];
  return c;
}

Index theoretical_solution_bound(MixingKind manifold, const BlockStructure& blocks) {
  const Index n = blocks.dim();
  const Index r = blocks.block_count();
  if (manifold == MixingKind::general_linear) return n * n - r;
  return n * (n - 1) / 2 - (r - 1);
}

CodimensionEstimate codimension_probe(const Signal& x, const Signal& y, MixingKind manifold,
                                      const BlockStructure& blocks, std::uint64_t seed,
                                      const ProbeOptions& options) {
  const Index n = blocks.dim();
  if (x.size() != n || y.size() != n) throw DimensionMismatch("codimension_probe: signal dimension");
  if (std::min((x - y).norm(), (x + y).norm()) <= 1e-6)
    throw InvalidInput("codimension_probe requires x and y not equal up to sign");

  const bool so = manifold == MixingKind::special_orthogonal;
  CodimensionEstimate est;
  est.ambient_dim = so ? n * (n - 1) / 2 : n * n;
  est.theoretical_bound = theoretical_solution_bound(manifold, blocks);

  // on SO(N) the block energies of Ax sum to |x|^2, so the fibre is empty unless norms agree
  const double norm_gap = std::abs(x.squaredNorm() - y.squaredNorm());
  if (so && norm_gap > 1e-9 * std::max({x.squaredNorm(), y.squaredNorm(), 1e-300})) {
    est.constraint_residual = norm_gap;
    est.converged = false;
    return est;
  }

  auto jacobian = [&](const RowMatrix& a) {
    return so ? so_constraint_jacobian(x, y, a, blocks) : gl_constraint_jacobian(x, y, a, blocks);
  };
  auto step_from = [&](const RowMatrix& a, const Vector& delta) -> RowMatrix {
    if (so) return orthonormalize(a + a * skew_from_vector(delta, n));
    return a + Eigen::Map<const RowMatrix>(delta.data(), n, n);
  };

  double best_residual = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < options.max_restarts; ++restart) {
    est.restarts_used = restart + 1;
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(restart));
    RowMatrix a = so ? RowMatrix(haar_rotation(n, rng)) : RowMatrix(gaussian_matrix(rng, n, n));
    Vector c = fiber_constraints(x, y, a, blocks);
    double res = c.norm();
    for (int it = 0; it < options.max_newton_iterations && res > options.target_residual; ++it) {
      const Matrix jac = jacobian(a);
      const Vector delta = jac.completeOrthogonalDecomposition().solve(-c);
      bool improved = false;
      double scale = 1.0;
      for (int bt = 0; bt < 30; ++bt, scale *= 0.5) {
        RowMatrix trial = step_from(a, scale * delta);
        Vector ct = fiber_constraints(x, y, trial, blocks);
        if (ct.norm() < res) {
          a = std::move(trial);
          c = std::move(ct);
          res = c.norm();
          improved = true;
          break;
        }
      }
      if (!improved) break;
    }
    if (res < best_residual) {
      best_residual = res;
      est.solution = a;
      est.constraint_residual = res;
    }
    if (res < options.accept_residual) break;
  }

  est.converged = best_residual < options.accept_residual;
  if (!est.converged) return est;

  Eigen::JacobiSVD<Matrix> svd(jacobian(est.solution));
  est.singular_values = svd.singularValues();
  est.rank = 0;
  if (est.singular_values.size() > 0 && est.singular_values[0] > 0.0)
    for (Index i = 0; i < est.singular_values.size(); ++i)
      est.rank += est.singular_values[i] > options.rank_tol * est.singular_values[0] ? 1 : 0;
  est.estimated_solution_dim = est.ambient_dim - est.rank;
  return est;
}

} // namespace sapr
