#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "oracles.hpp"
#include "sapr/error.hpp"
#include "sapr/mra.hpp"

using namespace sapr;

namespace {

std::vector<GroupAction> all_groups() {
  return {GroupAction::cyclic(8), GroupAction::cyclic(7), GroupAction::dihedral(8),
          GroupAction::dihedral(9), GroupAction::so3(3)};
}

Vector time_domain(const Signal& c) { return from_real_fourier(c); }

std::vector<double> as_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Signal in_image(const GeneratorNetwork& net, const MixingMatrix& a, std::uint64_t seed, double norm) {
  Rng rng = make_rng(seed);
  Vector z = gaussian_vector(rng, net.latent_dim());
  const Signal x = a.apply(generator_forward(net, z));
  return x * (norm / x.norm());  // relu nets are positively homogeneous
}

} // namespace

TEST_CASE("group elements act orthogonally and preserve block energies") {
  Rng rng = make_rng(1);
  for (const auto& group : all_groups()) {
    const auto& blocks = group.blocks();
    for (int trial = 0; trial < 100; ++trial) {
      const Signal x = gaussian_vector(rng, group.dim());
      const auto g = sample_group_element(group, rng);
      const Signal y = act(g, x, group);
      CHECK(std::abs(y.norm() - x.norm()) < 1e-12 * (1 + x.norm()));
      CHECK((second_moment_blocks(y, blocks) - second_moment_blocks(x, blocks)).cwiseAbs().maxCoeff() < 1e-10);
      if (trial < 5) {
        const Matrix m = action_matrix(g, group);
        CHECK((m * m.transpose() - Matrix::Identity(group.dim(), group.dim())).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((m * x - y).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("cyclic and dihedral actions match time-domain shifts and reflections") {
  Rng rng = make_rng(2);
  for (Index n : {5, 8}) {
    const Vector v = gaussian_vector(rng, n);
    const Signal c = to_real_fourier(v);
    for (Index s = 0; s < n; ++s) {
      const auto shifted = oracle::circular_shift(as_std(v), static_cast<std::size_t>(s));
      const Vector got = time_domain(act({s, false, {}}, c, GroupAction::cyclic(n)));
      for (Index t = 0; t < n; ++t) CHECK(got[t] == doctest::Approx(shifted[t]).epsilon(1e-12));

      std::vector<double> reflected(n);
      for (Index t = 0; t < n; ++t) reflected[t] = v[(n - t) % n];
      const auto both = oracle::circular_shift(reflected, static_cast<std::size_t>(s));
      const Vector got_d = time_domain(act({s, true, {}}, c, GroupAction::dihedral(n)));
      for (Index t = 0; t < n; ++t) CHECK(got_d[t] == doctest::Approx(both[t]).epsilon(1e-12));

      // shifting back returns the signal
      const Signal back = act({(n - s) % n, false, {}}, act({s, false, {}}, c, GroupAction::cyclic(n)),
                              GroupAction::cyclic(n));
      CHECK((back - c).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("group element validation") {
  const auto c = GroupAction::cyclic(4);
  const Signal x = Signal::Ones(4);
  CHECK_THROWS_AS(act({4, false, {}}, x, c), InvalidInput);
  CHECK_THROWS_AS(act({-1, false, {}}, x, c), InvalidInput);
  CHECK_THROWS_AS(act({1, true, {}}, x, c), InvalidInput);
  CHECK_THROWS_AS(act({0, false, {}}, Signal::Ones(5), c), DimensionMismatch);
  CHECK_THROWS_AS(GroupAction::so3(17), Unsupported);
  CHECK(parse_group_kind("so3-bandlimited") == GroupKind::so3);
  CHECK_THROWS(parse_group_kind("torus"));
}

TEST_CASE("noiseless observations are exact orbit points") {
  Rng rng = make_rng(3);
  for (const auto& group : all_groups()) {
    const Signal x = gaussian_vector(rng, group.dim());
    const auto obs = simulate_observations(x, group, 50, 0.0, 7);
    CHECK(obs.count() == 50);
    CHECK(obs.observations.cols() == group.dim());
    const auto e = second_moment_blocks(x, group.blocks());
    for (Index i = 0; i < obs.count(); ++i) {
      const Signal y = obs.observations.row(i).transpose();
      CHECK((second_moment_blocks(y, group.blocks()) - e).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  const auto one = simulate_observations(Signal::Ones(6), GroupAction::cyclic(6), 1, 0.5, 1);
  CHECK(one.observations.rows() == 1);
  CHECK(one.observations.cols() == 6);
  CHECK_THROWS(simulate_observations(Signal::Ones(6), GroupAction::cyclic(6), 1, -1.0, 1));
}

TEST_CASE("stream reproduces simulate_observations and snapshots by copy") {
  const Signal x = Signal::LinSpaced(8, -1, 1);
  const auto group = GroupAction::dihedral(8);
  const auto obs = simulate_observations(x, group, 20, 0.3, 11);
  ObservationStream s(x, group, 0.3, 11);
  Vector y(8);
  for (Index i = 0; i < 10; ++i) {
    s.next(y.data());
    CHECK((y.transpose() - obs.observations.row(i)).cwiseAbs().maxCoeff() == 0.0);
  }
  ObservationStream copy = s;
  Vector y2(8);
  for (Index i = 10; i < 20; ++i) {
    s.next(y.data());
    copy.next(y2.data());
    CHECK((y.transpose() - obs.observations.row(i)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((y - y2).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(s.produced() == 20);
}

TEST_CASE("sample column mean matches the orbit mean") {
  // the uniform-shift average of g x keeps only the DC coefficient
  const Index n = 8, count = 100000;
  Rng rng = make_rng(4);
  const Signal x = gaussian_vector(rng, n);
  const auto obs = simulate_observations(x, GroupAction::cyclic(n), count, 1.0, 5);
  const Vector mean = obs.observations.colwise().mean().transpose();
  const Matrix centered = obs.observations.rowwise() - mean.transpose();
  const Vector sd = (centered.cwiseAbs2().colwise().sum() / (count - 1)).cwiseSqrt().transpose();
  Vector expected = Vector::Zero(n);
  expected[0] = x[0];
  for (Index i = 0; i < n; ++i) CHECK(std::abs(mean[i] - expected[i]) < 3.0 * sd[i] / std::sqrt(double(count)));
}

TEST_CASE("second moment of a delta under all shifts") {
  // every shift of e_1 once: (1/4) sum e_s e_s^T = I/4 in the time domain
  const Index n = 4;
  const auto group = GroupAction::cyclic(n);
  Vector delta = Vector::Zero(n);
  delta[1] = 1.0;
  const Signal x = to_real_fourier(delta);
  MRAObservationSet obs{RowMatrix(n, n), 0.0, group, 0, x};
  for (Index s = 0; s < n; ++s) obs.observations.row(s) = act({s, false, {}}, x, group).transpose();
  const Matrix f = real_fourier_matrix(n);
  const Matrix est = estimate_second_moment(obs).matrix;
  CHECK((f.transpose() * est * f - Matrix::Identity(n, n) / 4.0).cwiseAbs().maxCoeff() < 1e-14);
  const Matrix pop = population_second_moment(x, group);
  CHECK((f.transpose() * pop * f - Matrix::Identity(n, n) / 4.0).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("population moment obeys the block-scalar law") {
  Rng rng = make_rng(6);
  for (const auto& group : {GroupAction::cyclic(8), GroupAction::cyclic(9), GroupAction::dihedral(8),
                            GroupAction::so3(2), GroupAction::so3(4)}) {
    const Signal x = gaussian_vector(rng, group.dim());
    const Matrix m = population_second_moment(x, group);
    const auto& b = group.blocks();
    const auto e = second_moment_blocks(x, b);
    Matrix expected = Matrix::Zero(group.dim(), group.dim());
    for (Index k = 0; k < b.block_count(); ++k)
      expected.block(b.offset(k), b.offset(k), b.block_dim(k), b.block_dim(k)) =
          Matrix::Identity(b.block_dim(k), b.block_dim(k)) * (e[k] / double(b.block_dim(k)));
    CHECK((m - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((extract_invariants(m, b) - e).cwiseAbs().maxCoeff() < 1e-12);
  }
  // degree-2 content only
  Signal x = Signal::Zero(9);
  x.tail(5) = Vector::LinSpaced(5, 1, 2);
  const auto inv = extract_invariants(population_second_moment(x, GroupAction::so3(2)), BlockStructure::spherical(2));
  CHECK(std::abs(inv[0]) < 1e-14);
  CHECK(std::abs(inv[1]) < 1e-14);
  CHECK(inv[2] == doctest::Approx(x.squaredNorm()).epsilon(1e-12));
  CHECK_THROWS_AS(extract_invariants(Matrix::Identity(4, 4), BlockStructure::spherical(2)), DimensionMismatch);
}

TEST_CASE("estimator error is at Monte Carlo scale and decays like n^-1/2") {
  const Index n = 8;
  const double sigma = 0.5;
  const auto group = GroupAction::cyclic(n);
  Rng rng = make_rng(7);
  const Signal x = gaussian_vector(rng, n);
  const Matrix truth = population_second_moment(x, group);

  // per-observation variance of y y^T - sigma^2 I, from an independent pilot run
  double per_obs = 0.0;
  {
    ObservationStream pilot(x, group, sigma, 99);
    Vector y(n);
    const int pilot_n = 20000;
    for (int i = 0; i < pilot_n; ++i) {
      pilot.next(y.data());
      per_obs += (y * y.transpose() - sigma * sigma * Matrix::Identity(n, n) - truth).squaredNorm();
    }
    per_obs /= pilot_n;
  }

  std::vector<double> ns, errs;
  SecondMomentAccumulator acc(n);
  ObservationStream stream(x, group, sigma, 8);
  Vector y(n);
  for (std::uint64_t target = 1000; target <= 1000000; target *= 10) {
    while (acc.count() < target) {
      stream.next(y.data());
      acc.add(y.data());
    }
    const double err = (acc.estimate(sigma).matrix - truth).norm();
    ns.push_back(double(target));
    errs.push_back(err);
    if (target == 1000000) CHECK(err < 3.0 * std::sqrt(per_obs / double(target)));
  }
  const double slope = loglog_slope(ns, errs);
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));

  // extracted invariants approach the block energies
  const auto inv = extract_invariants(acc.estimate(sigma), group.blocks());
  CHECK((inv - second_moment_blocks(x, group.blocks())).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("accumulator chunking changes only rounding") {
  const auto obs = simulate_observations(Signal::LinSpaced(6, 0, 1), GroupAction::cyclic(6), 5000, 1.0, 3);
  SecondMomentAccumulator a(6), b(6, 7);
  for (Index i = 0; i < obs.count(); ++i) {
    a.add(obs.observations.row(i).data());
    b.add(obs.observations.row(i).data());
  }
  const Matrix ma = a.estimate(1.0).matrix, mb = b.estimate(1.0).matrix;
  CHECK((ma - mb).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((ma - ma.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((estimate_second_moment(obs).matrix - ma).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("recovery from exact invariants") {
  const auto blocks = BlockStructure::power_spectrum(10);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const PriorModel prior = random_generator({2, 6, 10}, Activation::relu(), seed);
    const auto a = sample_mixing(10, MixingKind::special_orthogonal, 100 + seed);
    const Signal x = in_image(std::get<GeneratorNetwork>(prior), a, 200 + seed, 1.0);
    const auto fit = recover(second_moment_blocks(x, blocks), prior, a, blocks, {}, seed);
    CHECK(fit.error(x) < 1e-6);
    CHECK(fit.converged);
  }
  // sparse prior
  const PriorModel sparse = SparsePrior::generic(10, 2, SparseKind::generic_orthonormal, 5);
  const auto a = MixingMatrix::identity(10);
  const Signal s = sample_sparse(std::get<SparsePrior>(sparse), 6);
  CHECK(recover(second_moment_blocks(s, blocks), sparse, a, blocks, {}, 1).error(s) < 1e-6);
  // zero signal
  const PriorModel net = random_generator({2, 6, 10}, Activation::relu(), 9);
  const auto zero_fit = recover(MeasurementVector::Zero(blocks.block_count()), net, a, blocks, {}, 1);
  CHECK(zero_fit.x_hat.norm() < 1e-8);
  CHECK(zero_fit.error(Signal::Zero(10)) < 1e-8);
}

TEST_CASE("recovery is stable under small invariant perturbations") {
  const double delta = 1e-3;
  const auto blocks = BlockStructure::power_spectrum(10);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const PriorModel prior = random_generator({2, 6, 10}, Activation::relu(), seed);
    const auto a = sample_mixing(10, MixingKind::special_orthogonal, 300 + seed);
    const Signal x = in_image(std::get<GeneratorNetwork>(prior), a, 400 + seed, 1.0);
    Rng rng = make_rng(seed, 9);
    MeasurementVector inv = second_moment_blocks(x, blocks);
    const Vector noise = gaussian_vector(rng, inv.size());
    inv += delta * inv.norm() * noise / noise.norm();
    CHECK(recover(inv, prior, a, blocks, {}, seed).error(x) < 100 * delta);
  }
}

TEST_CASE("sample-complexity search") {
  const Index n = 8;
  const auto group = GroupAction::cyclic(n);
  const PriorModel prior = random_generator({2, 6, 8}, Activation::relu(), 1);
  const auto a = sample_mixing(n, MixingKind::special_orthogonal, 2);
  const Signal x = in_image(std::get<GeneratorNetwork>(prior), a, 3, 0.5);
  SampleComplexityOptions opts;
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  SUBCASE("noiseless needs one observation") {
    const auto t = sample_complexity_sweep(x, prior, a, group, {0.0}, seeds, opts);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].n_star == 1);
    CHECK(std::isnan(t.fitted_slope));
  }
  SUBCASE("cap saturates") {
    opts.n_cap = 64;
    const auto t = sample_complexity_sweep(x, prior, a, group, {2.0}, seeds, opts);
    CHECK(t.rows[0].saturated);
    CHECK(t.rows[0].n_star == 64);
  }
  SUBCASE("n_star grows with sigma and threads do not change the table") {
    const auto serial = sample_complexity_sweep(x, prior, a, group, {0.25, 0.5}, seeds, opts);
    opts.threads = 2;
    const auto parallel = sample_complexity_sweep(x, prior, a, group, {0.25, 0.5}, seeds, opts);
    REQUIRE(serial.rows.size() == 2);
    CHECK(serial.rows[0].n_star < serial.rows[1].n_star);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(serial.rows[i].n_star == parallel.rows[i].n_star);
      CHECK(serial.rows[i].median_error == parallel.rows[i].median_error);
      CHECK(serial.rows[i].median_error <= opts.target_error);
    }
  }
}

TEST_CASE("median error falls along the n grid") {
  // common random numbers: each seed's stream is extended, never redrawn
  const Index n = 8;
  const double sigma = 1.0;
  const auto group = GroupAction::cyclic(n);
  const PriorModel prior = random_generator({2, 6, 8}, Activation::relu(), 1);
  const auto a = sample_mixing(n, MixingKind::special_orthogonal, 2);
  const Signal x = in_image(std::get<GeneratorNetwork>(prior), a, 3, 0.5);
  const int seeds = 15;
  std::vector<ObservationStream> streams;
  std::vector<SecondMomentAccumulator> accs;
  for (int s = 0; s < seeds; ++s) {
    streams.emplace_back(x, group, sigma, derive_seed(s, 0));
    accs.emplace_back(n);
  }
  std::vector<double> medians;
  Vector y(n);
  for (std::uint64_t count = 1024; count <= (1u << 18); count *= 4) {
    std::vector<double> errs;
    for (int s = 0; s < seeds; ++s) {
      while (accs[s].count() < count) {
        streams[s].next(y.data());
        accs[s].add(y.data());
      }
      const auto inv = extract_invariants(accs[s].estimate(sigma), group.blocks());
      errs.push_back(recover(inv, prior, a, group.blocks(), {}, derive_seed(s, 7)).error(x));
    }
    std::nth_element(errs.begin(), errs.begin() + seeds / 2, errs.end());
    medians.push_back(errs[seeds / 2]);
  }
  for (std::size_t i = 1; i < medians.size(); ++i) CHECK(medians[i] < medians[i - 1]);
}

TEST_CASE("loglog slope") {
  CHECK(loglog_slope({1, 2, 4, 8}, {3, 48, 768, 12288}) == doctest::Approx(4.0));
  CHECK(std::isnan(loglog_slope({1}, {1})));
}

TEST_CASE("observation file round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "sapr_test_mra_io";
  std::filesystem::create_directories(dir);
  for (const auto& group : all_groups()) {
    const auto obs = simulate_observations(Signal::Ones(group.dim()), group, 17, 0.25, 42);
    const auto path = dir / "obs.bin";
    save_observations(obs, path);
    const auto back = load_observations(path);
    CHECK(back.observations == obs.observations);
    CHECK(back.sigma == 0.25);
    CHECK(back.seed == 42);
    CHECK(back.group.kind() == group.kind());
    CHECK(back.group.blocks() == group.blocks());
  }
  {
    std::ofstream bad(dir / "bad.bin", std::ios::binary);
    bad << "NOPE and some padding bytes to fill a header";
  }
  CHECK_THROWS_AS(load_observations(dir / "bad.bin"), FormatError);
  CHECK_THROWS(load_observations(dir / "missing.bin"));
  std::filesystem::remove_all(dir);
}
