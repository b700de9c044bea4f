#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "sapr/linalg.hpp"

namespace sapr {

/// Ordered irreducible block sizes (N_1, ..., N_R) partitioning R^N.
class BlockStructure {
public:
  explicit BlockStructure(std::vector<Index> dims);

  /// (1,1,2,...,2) for even N, (1,2,...,2) for odd N; R = floor(N/2)+1.
  static BlockStructure power_spectrum(Index n);

  /// Degree blocks (1,3,...,2L+1) of L-band-limited functions on the sphere.
  static BlockStructure spherical(Index band_limit);

  Index dim() const { return total_; }
  Index block_count() const { return static_cast<Index>(dims_.size()); }
  Index block_dim(Index k) const { return dims_[static_cast<std::size_t>(k)]; }
  Index offset(Index k) const { return offsets_[static_cast<std::size_t>(k)]; }
  const std::vector<Index>& dims() const { return dims_; }

  bool operator==(const BlockStructure&) const = default;

private:
  std::vector<Index> dims_;
  std::vector<Index> offsets_;
  Index total_ = 0;
};

inline BlockStructure block_structure_for_power_spectrum(Index n) {
  return BlockStructure::power_spectrum(n);
}

enum class MixingKind { general_linear, special_orthogonal };

std::string_view to_string(MixingKind kind);
MixingKind parse_mixing_kind(std::string_view text);

/// N x N mixing A with rows w_1..w_N; invariants of its kind are checked on construction.
class MixingMatrix {
public:
  MixingMatrix(RowMatrix entries, MixingKind kind);

  static MixingMatrix identity(Index n);

  const RowMatrix& entries() const { return entries_; }
  MixingKind kind() const { return kind_; }
  Index dim() const { return entries_.rows(); }
  std::span<const double> row(Index j) const {
    return {entries_.data() + j * entries_.cols(), static_cast<std::size_t>(entries_.cols())};
  }

  Vector apply(const Vector& x) const;

private:
  RowMatrix entries_;
  MixingKind kind_;
};

/// Orthonormal real Fourier analysis matrix F (coeffs = F * v). Row order:
/// DC, Nyquist (even N), then (cos_k, sin_k) for k = 1, 2, ...
Matrix real_fourier_matrix(Index n);

/// Time domain -> real Fourier block coordinates (unitary, direct O(N^2)).
Signal to_real_fourier(std::span<const double> v);
Signal to_real_fourier(const Vector& v);

/// Inverse of to_real_fourier.
Vector from_real_fourier(const Signal& coeffs);

/// Per-block sums of squared coefficients.
MeasurementVector second_moment_blocks(const Signal& x, const BlockStructure& blocks);

/// Entry k = sum over rows w_j of block k of <x, w_j>^2.
MeasurementVector separable_measurement(const Signal& x, const MixingMatrix& a,
                                        const BlockStructure& blocks);

/// R x N Jacobian of separable_measurement with respect to x.
Matrix measurement_jacobian(const Signal& x, const MixingMatrix& a, const BlockStructure& blocks);

} // namespace sapr
