#pragma once

#include <complex>

#include "sapr/linalg.hpp"

namespace sapr {

/// Z-Y-Z Euler angles: R = Rz(alpha) Ry(beta) Rz(gamma).
struct EulerAngles {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

inline constexpr Index kMaxBandLimit = 16;

Eigen::Matrix3d euler_to_rotation(const EulerAngles& angles);
EulerAngles rotation_to_euler(const Eigen::Matrix3d& r);

/// Complex Wigner small-d matrix d^l_{m'm}(beta), rows m' and columns m in -l..l.
/// Seeded at l = max(|m|,|m'|) by the single-term closed form, then raised with
/// the three-term recurrence in l.
Matrix wigner_small_d(Index l, double beta);

/// D^l_{m'm} = exp(-i m' alpha) d^l_{m'm}(beta) exp(-i m gamma).
Eigen::MatrixXcd wigner_complex(Index l, const EulerAngles& angles);

/// Real-harmonic Wigner matrix of degree l. Real harmonics are ordered
/// m = -l..l with sin(|m| phi) for m < 0 and cos(m phi) for m > 0; the matrix
/// maps the coefficients of f to those of f(R^{-1} .).
Matrix wigner_real(Index l, const EulerAngles& angles);

/// Block-diagonal (L+1)^2 x (L+1)^2 matrix of wigner_real for l = 0..L.
Matrix wigner_block(Index band_limit, const EulerAngles& angles);

/// Unitary U with (real harmonics) = U (complex harmonics), Condon-Shortley phase.
Eigen::MatrixXcd real_to_complex_harmonic_basis(Index l);

} // namespace sapr
