#include "sapr/wigner.hpp"

#include <cmath>
#include <string>

#include "sapr/error.hpp"

namespace sapr {
namespace {

using Complex = std::complex<double>;

// d^j_{m'm}(beta) at j = max(|m|,|m'|), where the Wigner sum has one term
double seed_small_d(Index j, Index mp, Index m, double beta) {
  const double c = std::cos(0.5 * beta);
  const double s = std::sin(0.5 * beta);
  // only s with all factorial arguments nonnegative contributes
  const Index s_lo = std::max<Index>(0, m - mp);
  const Index s_hi = std::min(j + m, j - mp);
  double total = 0.0;
  for (Index k = s_lo; k <= s_hi; ++k) {
    const double log_num = 0.5 * (std::lgamma(j + mp + 1.0) + std::lgamma(j - mp + 1.0) +
                                  std::lgamma(j + m + 1.0) + std::lgamma(j - m + 1.0));
    const double log_den = std::lgamma(j + m - k + 1.0) + std::lgamma(k + 1.0) +
                           std::lgamma(mp - m + k + 1.0) + std::lgamma(j - mp - k + 1.0);
    const double sign = ((mp - m + k) % 2 == 0) ? 1.0 : -1.0;
    const auto cos_pow = static_cast<int>(2 * j + m - mp - 2 * k);
    const auto sin_pow = static_cast<int>(mp - m + 2 * k);
    total += sign * std::exp(log_num - log_den) * std::pow(c, cos_pow) * std::pow(s, sin_pow);
  }
  return total;
}

} // namespace

Eigen::Matrix3d euler_to_rotation(const EulerAngles& e) {
  return (Eigen::AngleAxisd(e.alpha, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(e.beta, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(e.gamma, Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

EulerAngles rotation_to_euler(const Eigen::Matrix3d& r) {
  EulerAngles e;
  const double sb = std::hypot(r(0, 2), r(1, 2));
  e.beta = std::atan2(sb, r(2, 2));  // acos loses half the digits near 0 and pi
  if (sb > 1e-12) {
    e.alpha = std::atan2(r(1, 2), r(0, 2));
    e.gamma = std::atan2(r(2, 1), -r(2, 0));
  } else {
    // gimbal lock: only alpha +/- gamma is determined
    e.alpha = std::atan2(r(1, 0), r(0, 0));
    e.gamma = 0.0;
    if (r(2, 2) < 0.0) e.alpha = std::atan2(-r(1, 0), -r(0, 0));
  }
  return e;
}

Matrix wigner_small_d(Index l, double beta) {
  if (l < 0 || l > kMaxBandLimit)
    throw Unsupported("wigner_small_d supports 0 <= l <= " + std::to_string(kMaxBandLimit));
  const double cb = std::cos(beta);
  Matrix d(2 * l + 1, 2 * l + 1);
  for (Index mp = -l; mp <= l; ++mp) {
    for (Index m = -l; m <= l; ++m) {
      const Index j0 = std::max(std::abs(m), std::abs(mp));
      double prev = 0.0;
      double cur = seed_small_d(j0, mp, m, beta);
      for (Index j = j0; j < l; ++j) {
        const double jd = static_cast<double>(j);
        const double a = (jd + 1.0) * (2.0 * jd + 1.0) /
                         std::sqrt(((jd + 1.0) * (jd + 1.0) - double(m * m)) *
                                   ((jd + 1.0) * (jd + 1.0) - double(mp * mp)));
        const double mix = j == 0 ? 0.0 : double(m * mp) / (jd * (jd + 1.0));
        const double b = j == 0 ? 0.0
                                : std::sqrt((jd * jd - double(m * m)) * (jd * jd - double(mp * mp))) /
                                      (jd * (2.0 * jd + 1.0));
        const double next = a * ((cb - mix) * cur - b * prev);
        prev = cur;
        cur = next;
      }
      d(mp + l, m + l) = cur;
    }
  }
  return d;
}

Eigen::MatrixXcd wigner_complex(Index l, const EulerAngles& e) {
  const Matrix d = wigner_small_d(l, e.beta);
  Eigen::MatrixXcd out(2 * l + 1, 2 * l + 1);
  for (Index mp = -l; mp <= l; ++mp)
    for (Index m = -l; m <= l; ++m)
      out(mp + l, m + l) = std::polar(1.0, -double(mp) * e.alpha) * d(mp + l, m + l) *
                           std::polar(1.0, -double(m) * e.gamma);
  return out;
}

Eigen::MatrixXcd real_to_complex_harmonic_basis(Index l) {
  const double h = 1.0 / std::sqrt(2.0);
  const Complex i(0.0, 1.0);
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(2 * l + 1, 2 * l + 1);
  u(l, l) = 1.0;
  for (Index m = 1; m <= l; ++m) {
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    // cos(m phi) harmonic at +m, sin(m phi) harmonic at -m
    u(l + m, l + m) = sign * h;
    u(l + m, l - m) = h;
    u(l - m, l - m) = i * h;
    u(l - m, l + m) = -i * sign * h;
  }
  return u;
}

Matrix wigner_real(Index l, const EulerAngles& angles) {
  const Eigen::MatrixXcd u = real_to_complex_harmonic_basis(l);
  const Eigen::MatrixXcd d = wigner_complex(l, angles);
  return (u.conjugate() * d * u.transpose()).real();
}

Matrix wigner_block(Index band_limit, const EulerAngles& angles) {
  if (band_limit < 0 || band_limit > kMaxBandLimit)
    throw Unsupported("wigner_block supports band limits 0.." + std::to_string(kMaxBandLimit));
  const Index n = (band_limit + 1) * (band_limit + 1);
  Matrix out = Matrix::Zero(n, n);
  for (Index l = 0; l <= band_limit; ++l) out.block(l * l, l * l, 2 * l + 1, 2 * l + 1) = wigner_real(l, angles);
  return out;
}

} // namespace sapr
