#include <doctest.h>

#include "sapr/error.hpp"
#include "sapr/injectivity.hpp"

using namespace sapr;

namespace {

MixingMatrix fourier_mixing(Index n) {
  const RowMatrix f = real_fourier_matrix(n);
  return {f, f.determinant() > 0 ? MixingKind::special_orthogonal : MixingKind::general_linear};
}

void check_sound(const CollisionReport& r, const MixingMatrix& a, const BlockStructure& blocks,
                 const CollisionOptions& opts) {
  // recompute both measurement vectors from scratch
  const Vector ax = a.entries() * r.x, ay = a.entries() * r.y;
  const double s2 = 0.5 * (r.x.squaredNorm() + r.y.squaredNorm());
  const double res = (second_moment_blocks(ax, blocks) - second_moment_blocks(ay, blocks)).norm();
  CHECK(res / s2 < opts.residual_tol);
  CHECK(std::min((r.x - r.y).norm(), (r.x + r.y).norm()) / std::sqrt(s2) > opts.separation_tol);
}

} // namespace

TEST_CASE("regime classification") {
  CHECK(classify_regime(BlockStructure::power_spectrum(10).block_count(), 2, MixingKind::special_orthogonal) ==
        Regime::all_signals);
  CHECK(classify_regime(BlockStructure::power_spectrum(9).block_count(), 2, MixingKind::special_orthogonal) ==
        Regime::generic_signals);
  CHECK(classify_regime(BlockStructure::power_spectrum(6).block_count(), 2, MixingKind::special_orthogonal) ==
        Regime::generic_signals);
  CHECK(classify_regime(BlockStructure::power_spectrum(3).block_count(), 2, MixingKind::special_orthogonal) ==
        Regime::below_threshold);
  CHECK(classify_regime(BlockStructure::power_spectrum(8).block_count(), 2, MixingKind::general_linear) ==
        Regime::all_signals);
  CHECK(classify_regime(BlockStructure::power_spectrum(7).block_count(), 2, MixingKind::general_linear) ==
        Regime::generic_signals);
  CHECK(classify_regime(BlockStructure::power_spectrum(4).block_count(), 2, MixingKind::general_linear) ==
        Regime::generic_signals);
  CHECK(classify_regime(BlockStructure::power_spectrum(3).block_count(), 2, MixingKind::general_linear) ==
        Regime::below_threshold);
  // every N from the power-spectrum formulas
  for (Index n = 2; n <= 32; ++n)
    for (Index m = 1; m <= 8; ++m) {
      const Index r = n / 2 + 1;
      const auto so = classify_regime(r, m, MixingKind::special_orthogonal);
      CHECK((so == Regime::all_signals) == (n >= 4 * m + 2));
      CHECK((so != Regime::below_threshold) == (n >= 2 * m + 2));
      const auto gl = classify_regime(r, m, MixingKind::general_linear);
      CHECK((gl == Regime::all_signals) == (n >= 4 * m));
      CHECK((gl != Regime::below_threshold) == (n >= 2 * m));
    }
}

TEST_CASE("evaluate_pair") {
  const auto blocks = BlockStructure::power_spectrum(6);
  const auto a = MixingMatrix::identity(6);
  Vector x(6);
  x << 1, 2, 3, 4, 5, 6;
  const auto sign = evaluate_pair(x, -x, a, blocks);
  CHECK(sign.verdict == Verdict::no_collision_found);
  CHECK(sign.separation == 0.0);

  Vector y = x;
  y[2] = x[3];
  y[3] = -x[2];  // rotate inside the first (cos, sin) pair
  const auto torus = evaluate_pair(x, y, a, blocks);
  CHECK(torus.verdict == Verdict::collision);
  CHECK(torus.residual < 1e-12);
}

TEST_CASE("collision search: negative controls") {
  CollisionOptions opts;
  opts.restarts = 20;
  SUBCASE("all of R^N under the identity") {
    const auto blocks = BlockStructure::power_spectrum(8);
    const auto a = MixingMatrix::identity(8);
    const auto r = collision_search(SparsePrior::standard(8, 8), a, blocks, opts, 1);
    CHECK(r.verdict == Verdict::collision);
    CHECK(r.residual < 1e-12);
    CHECK(r.separation > 0.1);
    check_sound(r, a, blocks, opts);
  }
  SUBCASE("2-sparse time-domain signals and their shifts") {
    const Index n = 10;
    const auto blocks = BlockStructure::power_spectrum(n);
    const auto f = fourier_mixing(n);
    Vector x = Vector::Zero(n), y = Vector::Zero(n);
    x[1] = 1.5;
    x[4] = -0.7;
    y[4] = 1.5;
    y[7] = -0.7;  // support shifted by 3
    const auto pair = evaluate_pair(x, y, f, blocks);
    CHECK(pair.verdict == Verdict::collision);
    CHECK(pair.residual < 1e-12);

    const auto r = collision_search(SparsePrior::standard(n, 2), f, blocks, opts, 2);
    CHECK(r.verdict == Verdict::collision);
    CHECK(r.residual < 1e-12);
    check_sound(r, f, blocks, opts);
  }
}

TEST_CASE("collision search: no collision above the threshold") {
  // N = 9 >= 4M with M = 2 under GL; 200 restarts
  const auto blocks = BlockStructure::power_spectrum(9);
  const auto prior = random_generator({2, 6, 9}, Activation::relu(), 3);
  const auto a = sample_mixing(9, MixingKind::general_linear, 4);
  const auto r = collision_search(prior, a, blocks, CollisionOptions{}, 5);
  CHECK(r.verdict == Verdict::no_collision_found);
  CHECK(r.restarts_used == 200);
  // the reported pair is never a sign pair passed off as a collision
  CHECK(r.relative_separation > 0.0);
}

TEST_CASE("collision search is deterministic") {
  const auto blocks = BlockStructure::power_spectrum(6);
  const auto prior = random_generator({2, 4, 6}, Activation::relu(), 7);
  const auto a = sample_mixing(6, MixingKind::special_orthogonal, 8);
  CollisionOptions opts;
  opts.restarts = 10;
  const auto r1 = collision_search(prior, a, blocks, opts, 9);
  const auto r2 = collision_search(prior, a, blocks, opts, 9);
  CHECK(r1.x == r2.x);
  CHECK(r1.y == r2.y);
  CHECK(r1.residual == r2.residual);
}

TEST_CASE("brute-force oracle") {
  const auto blocks = BlockStructure::power_spectrum(9);
  const auto a = sample_mixing(9, MixingKind::general_linear, 1);
  SUBCASE("constant-zero generator") {
    GeneratorNetwork zero({Layer{Matrix::Zero(4, 2), {}, Activation::relu()}, Layer{Matrix::Zero(9, 4), {}, Activation::identity()}});
    CHECK(brute_force_collision_oracle(zero, a, blocks, 30).verdict == Verdict::no_collision_found);
  }
  SUBCASE("line into the DC block") {
    Matrix w = Matrix::Zero(9, 1);
    w(0, 0) = 1.0;
    GeneratorNetwork line({Layer{w, {}, Activation::identity()}});
    CHECK(brute_force_collision_oracle(line, MixingMatrix::identity(9), blocks, 101).verdict ==
          Verdict::no_collision_found);
  }
  SUBCASE("rejects latent dimension 3") {
    const auto net = random_generator({3, 9}, Activation::relu(), 1);
    CHECK_THROWS_AS(brute_force_collision_oracle(net, a, blocks, 10), Unsupported);
  }
  SUBCASE("finds the torus collision of a 2-sparse prior under the identity") {
    const auto b = BlockStructure::power_spectrum(5);
    const auto r = brute_force_collision_oracle(SparsePrior::standard(5, 2), MixingMatrix::identity(5), b, 41);
    CHECK(r.verdict == Verdict::collision);
  }
  SUBCASE("agrees with collision_search below the threshold") {
    const auto b3 = BlockStructure::power_spectrum(3);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto prior = random_generator({2, 6, 3}, Activation::relu(), 400 + seed);
      const auto mix = sample_mixing(3, MixingKind::special_orthogonal, 500 + seed);
      CollisionOptions opts;
      opts.restarts = 50;
      const auto search = collision_search(prior, mix, b3, opts, 600 + seed);
      const auto grid = brute_force_collision_oracle(prior, mix, b3, 120);
      CHECK(search.verdict == Verdict::collision);
      CHECK(search.verdict == grid.verdict);
    }
  }
  SUBCASE("agrees with collision_search on generic instances") {
    for (std::uint64_t seed = 0; seed < 2; ++seed) {
      const auto prior = random_generator({2, 6, 9}, Activation::relu(), 100 + seed);
      const auto mix = sample_mixing(9, MixingKind::general_linear, 200 + seed);
      CollisionOptions opts;
      opts.restarts = 50;
      const auto search = collision_search(prior, mix, blocks, opts, 300 + seed);
      const auto grid = brute_force_collision_oracle(prior, mix, blocks, 120);
      CHECK(search.verdict == grid.verdict);
    }
  }
}

TEST_CASE("threshold sweep") {
  CollisionOptions opts;
  opts.restarts = 30;
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 20; ++s) seeds.push_back(1000 + s);
  const auto table = threshold_sweep(PriorFamily{}, {3, 6, 10}, {2}, MixingKind::special_orthogonal, seeds, opts);
  REQUIRE(table.cells.size() == 3);
  CHECK(table.rows.size() == 60);
  CHECK(table.cells[0].regime == Regime::below_threshold);
  CHECK(table.cells[1].regime == Regime::generic_signals);
  CHECK(table.cells[1].collision_fraction == 0.0);
  CHECK(table.cells[2].regime == Regime::all_signals);
  CHECK(table.cells[2].collision_fraction == 0.0);
  // rows are ordered by (N, M, seed)
  CHECK(table.rows.front().n == 3);
  CHECK(table.rows.back().n == 10);
  CHECK(table.rows[1].seed == 1001);

  const auto threaded = threshold_sweep(PriorFamily{}, {3, 6}, {2}, MixingKind::special_orthogonal,
                                        {1, 2, 3}, opts, 3);
  const auto serial = threshold_sweep(PriorFamily{}, {3, 6}, {2}, MixingKind::special_orthogonal, {1, 2, 3}, opts, 1);
  REQUIRE(threaded.rows.size() == serial.rows.size());
  for (std::size_t i = 0; i < serial.rows.size(); ++i) CHECK(threaded.rows[i].residual == serial.rows[i].residual);
}
