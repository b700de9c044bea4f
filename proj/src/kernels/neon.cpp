#include "kernels/detail.hpp"

#include <arm_neon.h>

namespace sapr::kernels::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_squares_neon(const double* a, std::size_t n) { return dot_neon(a, a, n); }

void gemv_neon(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_neon(a + r * cols, x, cols);
}

void rank1_update_neon(double* m, std::size_t n, const double* y, double alpha) {
  for (std::size_t i = 0; i < n; ++i) {
    const double yi = alpha * y[i];
    const float64x2_t vyi = vdupq_n_f64(yi);
    double* row = m + i * n;
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) vst1q_f64(row + j, vfmaq_f64(vld1q_f64(row + j), vyi, vld1q_f64(y + j)));
    for (; j < n; ++j) row[j] += yi * y[j];
  }
}

void squared_distances_soa_neon(const double* soa, std::size_t count, std::size_t dim,
                                const double* q, double* out) {
  std::size_t i = 0;
  for (; i + 2 <= count; i += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t d = 0; d < dim; ++d) {
      const float64x2_t diff = vsubq_f64(vld1q_f64(soa + d * count + i), vdupq_n_f64(q[d]));
      acc = vfmaq_f64(acc, diff, diff);
    }
    vst1q_f64(out + i, acc);
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

const Table& neon_table() {
  static const Table table{Isa::neon, dot_neon, sum_squares_neon, gemv_neon, rank1_update_neon,
                           squared_distances_soa_neon};
  return table;
}

} // namespace sapr::kernels::detail
