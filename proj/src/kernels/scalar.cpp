#include "sapr/kernels.hpp"

namespace sapr::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_squares_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
  return s;
}

void gemv_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(a + r * cols, x, cols);
}

void rank1_update_scalar(double* m, std::size_t n, const double* y, double alpha) {
  for (std::size_t i = 0; i < n; ++i) {
    const double yi = alpha * y[i];
    double* row = m + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += yi * y[j];
  }
}

void squared_distances_soa_scalar(const double* soa, std::size_t count, std::size_t dim,
                                  const double* q, double* out) {
  for (std::size_t i = 0; i < count; ++i) out[i] = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double* col = soa + d * count;
    const double qd = q[d];
    for (std::size_t i = 0; i < count; ++i) {
      const double diff = col[i] - qd;
      out[i] += diff * diff;
    }
  }
}

} // namespace

const Table& scalar_table() {
  static const Table table{Isa::scalar, dot_scalar, sum_squares_scalar, gemv_scalar,
                           rank1_update_scalar, squared_distances_soa_scalar};
  return table;
}

} // namespace sapr::kernels
