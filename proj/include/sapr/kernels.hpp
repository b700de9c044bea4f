#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference in
// scalar.cpp; vector variants (AVX2+FMA on x86-64, NEON on aarch64) are
// selected once at runtime and must agree with the scalar reference up to
// summation-order rounding.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace sapr::kernels {

enum class Isa { scalar, avx2, neon };

struct Table {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_squares)(const double* a, std::size_t n);
  // y[r] = sum_c a[r*cols + c] * x[c]
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // m (n x n row-major) += alpha * y y^T
  void (*rank1_update)(double* m, std::size_t n, const double* y, double alpha);
  // out[i] = sum_d (soa[d*count + i] - q[d])^2
  void (*squared_distances_soa)(const double* soa, std::size_t count, std::size_t dim,
                                const double* q, double* out);
};

const Table& scalar_table();

/// Vector tables compiled into this build and supported by the running CPU.
std::vector<const Table*> available_tables();

/// Widest supported table; resolved once per process.
const Table& active();

std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline double sum_squares(std::span<const double> a) {
  return active().sum_squares(a.data(), a.size());
}

} // namespace sapr::kernels
