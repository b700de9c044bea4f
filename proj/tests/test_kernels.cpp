#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sapr/kernels.hpp"

using namespace sapr;

namespace {

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double close(double a, double b, double scale) { return std::abs(a - b) <= 1e-12 * (1.0 + scale); }

} // namespace

TEST_CASE("scalar table is always present and active table is known") {
  CHECK(kernels::scalar_table().isa == kernels::Isa::scalar);
  CHECK(kernels::isa_name(kernels::active().isa) != "unknown");
}

TEST_CASE("vector kernels agree with scalar reference") {
  std::mt19937_64 rng(7);
  const auto& ref = kernels::scalar_table();
  for (const auto* table : kernels::available_tables()) {
    CAPTURE(kernels::isa_name(table->isa));
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 67u}) {
      CAPTURE(n);
      const auto a = random_values(rng, n);
      const auto b = random_values(rng, n);
      double scale = 0.0;
      for (std::size_t i = 0; i < n; ++i) scale += std::abs(a[i] * b[i]);
      CHECK(close(table->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), scale));
      CHECK(close(table->sum_squares(a.data(), n), ref.sum_squares(a.data(), n), ref.sum_squares(a.data(), n)));

      const std::size_t rows = 1 + n % 5;
      const auto m = random_values(rng, rows * n);
      std::vector<double> y1(rows), y2(rows);
      table->gemv(m.data(), rows, n, a.data(), y1.data());
      ref.gemv(m.data(), rows, n, a.data(), y2.data());
      for (std::size_t r = 0; r < rows; ++r) CHECK(close(y1[r], y2[r], 10.0 * n));

      auto acc1 = random_values(rng, n * n);
      auto acc2 = acc1;
      table->rank1_update(acc1.data(), n, a.data(), 0.75);
      ref.rank1_update(acc2.data(), n, a.data(), 0.75);
      for (std::size_t i = 0; i < n * n; ++i) CHECK(close(acc1[i], acc2[i], 10.0));
    }
    for (std::size_t dim : {1u, 2u, 5u, 8u}) {
      for (std::size_t count : {1u, 3u, 4u, 5u, 13u, 100u}) {
        const auto soa = random_values(rng, dim * count);
        const auto q = random_values(rng, dim);
        std::vector<double> d1(count), d2(count);
        table->squared_distances_soa(soa.data(), count, dim, q.data(), d1.data());
        ref.squared_distances_soa(soa.data(), count, dim, q.data(), d2.data());
        for (std::size_t i = 0; i < count; ++i) CHECK(close(d1[i], d2[i], d2[i]));
      }
    }
  }
}

TEST_CASE("scalar kernels match textbook definitions") {
  const std::vector<double> a{1, 2, 3}, b{4, -5, 6};
  CHECK(kernels::scalar_table().dot(a.data(), b.data(), 3) == doctest::Approx(12.0));
  CHECK(kernels::scalar_table().sum_squares(a.data(), 3) == doctest::Approx(14.0));
  // soa layout: coordinate d of point i at soa[d*count + i]
  const std::vector<double> soa{0, 1, 0, 1};  // points (0,0), (1,1)
  const std::vector<double> q{1, 0};
  std::vector<double> out(2);
  kernels::scalar_table().squared_distances_soa(soa.data(), 2, 2, q.data(), out.data());
  CHECK(out[0] == doctest::Approx(1.0));
  CHECK(out[1] == doctest::Approx(1.0));
}
