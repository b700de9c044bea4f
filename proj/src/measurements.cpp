#include "sapr/measurements.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sapr/error.hpp"
#include "sapr/kernels.hpp"

namespace sapr {
namespace {

constexpr double kOrthTol = 1e-10;

void require_dim(Index got, Index want, const char* what) {
  if (got != want)
    throw DimensionMismatch(std::string(what) + ": expected dimension " + std::to_string(want) +
                            ", got " + std::to_string(got));
}

// angle 2*pi*(k*t mod n)/n, reduced before the multiply to keep it exact-ish
double fourier_angle(Index k, Index t, Index n) {
  return 2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
}

} // namespace

BlockStructure::BlockStructure(std::vector<Index> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw InvalidDimension("block structure needs at least one block");
  offsets_.reserve(dims_.size());
  for (Index d : dims_) {
    if (d < 1) throw InvalidDimension("block dimensions must be >= 1");
    offsets_.push_back(total_);
    total_ += d;
  }
}

BlockStructure BlockStructure::power_spectrum(Index n) {
  if (n < 1) throw InvalidDimension("power spectrum needs N >= 1, got " + std::to_string(n));
  std::vector<Index> dims;
  dims.push_back(1);
  if (n % 2 == 0) dims.push_back(1);
  while (static_cast<Index>(dims.size()) < n / 2 + 1) dims.push_back(2);
  return BlockStructure(std::move(dims));
}

BlockStructure BlockStructure::spherical(Index band_limit) {
  if (band_limit < 0) throw InvalidDimension("band limit must be >= 0");
  std::vector<Index> dims;
  for (Index l = 0; l <= band_limit; ++l) dims.push_back(2 * l + 1);
  return BlockStructure(std::move(dims));
}

std::string_view to_string(MixingKind kind) {
  return kind == MixingKind::general_linear ? "general-linear" : "special-orthogonal";
}

MixingKind parse_mixing_kind(std::string_view text) {
  if (text == "general-linear" || text == "gl") return MixingKind::general_linear;
  if (text == "special-orthogonal" || text == "so") return MixingKind::special_orthogonal;
  throw InvalidInput("unknown mixing kind '" + std::string(text) + "'");
}

MixingMatrix::MixingMatrix(RowMatrix entries, MixingKind kind)
    : entries_(std::move(entries)), kind_(kind) {
  const Index n = entries_.rows();
  if (n < 1 || entries_.cols() != n) throw InvalidDimension("mixing matrix must be square, N >= 1");
  if (kind_ == MixingKind::special_orthogonal) {
    const double orth = (entries_.transpose() * entries_ - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
    if (orth > kOrthTol) throw InvalidInput("special-orthogonal mixing violates A^T A = I");
    if (std::abs(Matrix(entries_).determinant() - 1.0) > kOrthTol)
      throw InvalidInput("special-orthogonal mixing must have det(A) = +1");
  } else {
    Eigen::JacobiSVD<Matrix> svd(entries_);
    const auto& s = svd.singularValues();
    if (!(s[n - 1] > 1e-12 * s[0])) throw InvalidInput("general-linear mixing is numerically singular");
  }
}

MixingMatrix MixingMatrix::identity(Index n) {
  return MixingMatrix(RowMatrix::Identity(n, n), MixingKind::special_orthogonal);
}

Vector MixingMatrix::apply(const Vector& x) const {
  require_dim(x.size(), dim(), "mixing apply");
  Vector y(dim());
  kernels::active().gemv(entries_.data(), static_cast<std::size_t>(dim()),
                         static_cast<std::size_t>(dim()), x.data(), y.data());
  return y;
}

Matrix real_fourier_matrix(Index n) {
  if (n < 1) throw InvalidDimension("real Fourier basis needs N >= 1");
  Matrix f(n, n);
  const double dc = 1.0 / std::sqrt(static_cast<double>(n));
  const double pair = std::sqrt(2.0 / static_cast<double>(n));
  Index row = 0;
  f.row(row++).setConstant(dc);
  if (n % 2 == 0) {
    for (Index t = 0; t < n; ++t) f(row, t) = (t % 2 == 0) ? dc : -dc;
    ++row;
  }
  for (Index k = 1; row < n; ++k) {
    for (Index t = 0; t < n; ++t) {
      const double angle = fourier_angle(k, t, n);
      f(row, t) = pair * std::cos(angle);
      f(row + 1, t) = pair * std::sin(angle);
    }
    row += 2;
  }
  return f;
}

Signal to_real_fourier(std::span<const double> v) {
  const Index n = static_cast<Index>(v.size());
  if (n < 1) throw InvalidDimension("to_real_fourier needs N >= 1");
  const double dc = 1.0 / std::sqrt(static_cast<double>(n));
  const double pair = std::sqrt(2.0 / static_cast<double>(n));
  Signal out(n);
  Index row = 0;
  double sum = 0.0;
  for (double value : v) sum += value;
  out[row++] = dc * sum;
  if (n % 2 == 0) {
    double alt = 0.0;
    for (Index t = 0; t < n; ++t) alt += (t % 2 == 0) ? v[t] : -v[t];
    out[row++] = dc * alt;
  }
  for (Index k = 1; row < n; ++k) {
    double c = 0.0;
    double s = 0.0;
    for (Index t = 0; t < n; ++t) {
      const double angle = fourier_angle(k, t, n);
      c += v[t] * std::cos(angle);
      s += v[t] * std::sin(angle);
    }
    out[row++] = pair * c;
    out[row++] = pair * s;
  }
  return out;
}

Signal to_real_fourier(const Vector& v) {
  return to_real_fourier(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

Vector from_real_fourier(const Signal& coeffs) {
  return real_fourier_matrix(coeffs.size()).transpose() * coeffs;
}

MeasurementVector second_moment_blocks(const Signal& x, const BlockStructure& blocks) {
  require_dim(x.size(), blocks.dim(), "second_moment_blocks");
  const auto& k = kernels::active();
  MeasurementVector out(blocks.block_count());
  for (Index b = 0; b < blocks.block_count(); ++b)
    out[b] = k.sum_squares(x.data() + blocks.offset(b), static_cast<std::size_t>(blocks.block_dim(b)));
  return out;
}

MeasurementVector separable_measurement(const Signal& x, const MixingMatrix& a,
                                        const BlockStructure& blocks) {
  require_dim(x.size(), blocks.dim(), "separable_measurement (signal)");
  require_dim(a.dim(), blocks.dim(), "separable_measurement (mixing)");
  const auto& k = kernels::active();
  const auto n = static_cast<std::size_t>(x.size());
  MeasurementVector out = MeasurementVector::Zero(blocks.block_count());
  for (Index b = 0; b < blocks.block_count(); ++b) {
    for (Index j = blocks.offset(b); j < blocks.offset(b) + blocks.block_dim(b); ++j) {
      const double ip = k.dot(a.row(j).data(), x.data(), n);
      out[b] += ip * ip;
    }
  }
  return out;
}

Matrix measurement_jacobian(const Signal& x, const MixingMatrix& a, const BlockStructure& blocks) {
  require_dim(x.size(), blocks.dim(), "measurement_jacobian (signal)");
  require_dim(a.dim(), blocks.dim(), "measurement_jacobian (mixing)");
  const auto& k = kernels::active();
  const auto n = static_cast<std::size_t>(x.size());
  Matrix jac = Matrix::Zero(blocks.block_count(), x.size());
  for (Index b = 0; b < blocks.block_count(); ++b) {
    for (Index j = blocks.offset(b); j < blocks.offset(b) + blocks.block_dim(b); ++j) {
      const double ip = k.dot(a.row(j).data(), x.data(), n);
      jac.row(b) += (2.0 * ip) * a.entries().row(j);
    }
  }
  return jac;
}

} // namespace sapr
