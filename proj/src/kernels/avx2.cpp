// Compiled with -mavx2 -mfma. Must not include Eigen or any header whose
// inline functions could be emitted here with AVX encodings.
#include "kernels/detail.hpp"

#include <immintrin.h>

namespace sapr::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_squares_avx2(const double* a, std::size_t n) { return dot_avx2(a, a, n); }

void gemv_avx2(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_avx2(a + r * cols, x, cols);
}

void rank1_update_avx2(double* m, std::size_t n, const double* y, double alpha) {
  for (std::size_t i = 0; i < n; ++i) {
    const double yi = alpha * y[i];
    const __m256d vyi = _mm256_set1_pd(yi);
    double* row = m + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      __m256d r = _mm256_loadu_pd(row + j);
      r = _mm256_fmadd_pd(vyi, _mm256_loadu_pd(y + j), r);
      _mm256_storeu_pd(row + j, r);
    }
    for (; j < n; ++j) row[j] += yi * y[j];
  }
}

void squared_distances_soa_avx2(const double* soa, std::size_t count, std::size_t dim,
                                const double* q, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t d = 0; d < dim; ++d) {
      const __m256d diff =
          _mm256_sub_pd(_mm256_loadu_pd(soa + d * count + i), _mm256_set1_pd(q[d]));
      acc = _mm256_fmadd_pd(diff, diff, acc);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < count; ++i) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = soa[d * count + i] - q[d];
      s += diff * diff;
    }
    out[i] = s;
  }
}

} // namespace

const Table& avx2_table() {
  static const Table table{Isa::avx2, dot_avx2, sum_squares_avx2, gemv_avx2, rank1_update_avx2,
                           squared_distances_soa_avx2};
  return table;
}

} // namespace sapr::kernels::detail
