#include "sapr/injectivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "latent.hpp"
#include "sapr/error.hpp"
#include "sapr/kernels.hpp"
#include "sapr/least_squares.hpp"

namespace sapr {
namespace {

constexpr double kTiny = 1e-300;

struct PairScore {
  double residual;
  double separation;
  double relative_residual;
  double relative_separation;
};

PairScore score_pair(const Signal& x, const Signal& y, const MeasurementVector& px,
                     const MeasurementVector& py) {
  PairScore s{};
  s.residual = (px - py).norm();
  s.separation = std::min((x - y).norm(), (x + y).norm());
  const double scale2 = 0.5 * (x.squaredNorm() + y.squaredNorm());
  s.relative_residual = scale2 > kTiny ? s.residual / scale2 : 0.0;
  s.relative_separation = scale2 > kTiny ? s.separation / std::sqrt(scale2) : 0.0;
  return s;
}

CollisionReport make_report(const Signal& x, const Signal& y, const PairScore& s,
                            double residual_tol, double separation_tol) {
  CollisionReport r;
  r.x = x;
  r.y = y;
  r.residual = s.residual;
  r.separation = s.separation;
  r.relative_residual = s.relative_residual;
  r.relative_separation = s.relative_separation;
  r.decision_threshold = residual_tol;
  r.verdict = (s.relative_residual < residual_tol && s.relative_separation > separation_tol)
                  ? Verdict::collision
                  : Verdict::no_collision_found;
  return r;
}

void check_prior_dims(const PriorModel& prior, const MixingMatrix& a, const BlockStructure& blocks) {
  if (prior_dim(prior) != a.dim() || a.dim() != blocks.dim())
    throw DimensionMismatch("prior dimension " + std::to_string(prior_dim(prior)) + ", mixing " +
                            std::to_string(a.dim()) + " and blocks " + std::to_string(blocks.dim()) +
                            " must agree");
}

} // namespace

std::string_view to_string(Verdict verdict) {
  return verdict == Verdict::collision ? "collision" : "no-collision-found";
}

CollisionReport evaluate_pair(const Signal& x, const Signal& y, const MixingMatrix& a,
                              const BlockStructure& blocks, const CollisionOptions& options) {
  const auto px = separable_measurement(x, a, blocks);
  const auto py = separable_measurement(y, a, blocks);
  auto report = make_report(x, y, score_pair(x, y, px, py), options.residual_tol, options.separation_tol);
  report.converged = true;
  return report;
}

CollisionReport collision_search(const PriorModel& prior, const MixingMatrix& a,
                                 const BlockStructure& blocks, const CollisionOptions& options,
                                 std::uint64_t seed) {
  check_prior_dims(prior, a, blocks);
  if (options.anchor && options.anchor->size() != a.dim())
    throw DimensionMismatch("collision_search: anchor signal has the wrong dimension");
  if (options.restarts < 1) throw InvalidInput("collision_search needs restarts >= 1");

  const Index r_count = blocks.block_count();
  const double sqrt_w = std::sqrt(options.penalty_weight);

  LeastSquaresOptions lsq;
  lsq.max_iterations = options.max_iterations;
  lsq.cost_tol = 1e-32;

  CollisionReport best;
  best.seed = seed;
  double best_cost = std::numeric_limits<double>::infinity();
  bool any_converged = false;

  for (int restart = 0; restart < options.restarts; ++restart) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(restart));
    const detail::LatentMap first = detail::random_latent_map(prior, rng);
    const detail::LatentMap second = detail::random_latent_map(prior, rng);
    const bool anchored = options.anchor.has_value();
    const Index d1 = anchored ? 0 : first.dim;
    const Index d2 = second.dim;

    auto signals = [&](const Vector& p) {
      Signal x1 = anchored ? *options.anchor : first.eval(p.head(d1));
      Signal x2 = second.eval(p.segment(d1, d2));
      return std::pair{std::move(x1), std::move(x2)};
    };
    auto residual = [&](const Vector& p) -> Vector {
      const auto [x1, x2] = signals(p);
      Vector r(r_count + 1);
      const double scale2 = 0.5 * (x1.squaredNorm() + x2.squaredNorm());
      if (scale2 <= kTiny) {
        r.setZero();
        r[r_count] = sqrt_w * options.separation_tol;
        return r;
      }
      r.head(r_count) =
          (separable_measurement(x1, a, blocks) - separable_measurement(x2, a, blocks)) / scale2;
      const double sep = std::min((x1 - x2).norm(), (x1 + x2).norm()) / std::sqrt(scale2);
      r[r_count] = sqrt_w * std::max(0.0, options.separation_tol - sep);
      return r;
    };

    const Vector start = gaussian_vector(rng, d1 + d2);
    const auto fit = damped_gauss_newton(residual, start, lsq);
    any_converged = any_converged || fit.converged;

    const auto [x1, x2] = signals(fit.params);
    const auto px = separable_measurement(x1, a, blocks);
    const auto py = separable_measurement(x2, a, blocks);
    auto report = make_report(x1, x2, score_pair(x1, x2, px, py), options.residual_tol,
                              options.separation_tol);
    if (report.verdict == Verdict::collision || fit.cost < best_cost) {
      best_cost = fit.cost;
      report.seed = seed;
      report.restarts_used = restart + 1;
      report.converged = fit.converged;
      best = std::move(report);
    }
    best.restarts_used = restart + 1;
    if (best.verdict == Verdict::collision) break;
  }
  if (best.verdict != Verdict::collision) best.converged = any_converged;
  return best;
}

CollisionReport brute_force_collision_oracle(const PriorModel& prior, const MixingMatrix& a,
                                             const BlockStructure& blocks, int grid_points_per_axis,
                                             const OracleOptions& options) {
  check_prior_dims(prior, a, blocks);
  const Index latent = prior_latent_dim(prior);
  if (latent > 2)
    throw Unsupported("brute_force_collision_oracle supports latent dimension <= 2, got " +
                      std::to_string(latent));
  if (grid_points_per_axis < 2 || grid_points_per_axis > 200)
    throw InvalidInput("grid_points_per_axis must be in [2, 200]");

  const Index g = grid_points_per_axis;
  const Index per_chart = latent == 1 ? g : g * g;

  // charts: the generator itself, or one chart per support of a sparse prior
  std::vector<detail::LatentMap> charts;
  if (const auto* net = std::get_if<GeneratorNetwork>(&prior)) {
    charts.push_back(detail::generator_map(*net));
  } else {
    const auto& sparse = std::get<SparsePrior>(prior);
    const Index n = sparse.dim();
    if (sparse.sparsity == 1) {
      for (Index i = 0; i < n; ++i) charts.push_back(detail::sparse_map(sparse, {i}));
    } else {
      for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) charts.push_back(detail::sparse_map(sparse, {i, j}));
    }
    if (static_cast<Index>(charts.size()) * per_chart > 200 * 200)
      throw Unsupported("brute_force_collision_oracle: sparse grid exceeds 40000 points");
  }

  auto grid_coord = [g](Index i) { return -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(g - 1); };

  const Index n = a.dim();
  const Index r = blocks.block_count();
  const Index total = static_cast<Index>(charts.size()) * per_chart;
  std::vector<Signal> xs(static_cast<std::size_t>(total));
  std::vector<MeasurementVector> ps(static_cast<std::size_t>(total));
  for (std::size_t c = 0; c < charts.size(); ++c) {
    for (Index p = 0; p < per_chart; ++p) {
      Vector z(latent);
      z[0] = grid_coord(p % g);
      if (latent == 2) z[1] = grid_coord(p / g);
      const auto idx = static_cast<std::size_t>(static_cast<Index>(c) * per_chart + p);
      xs[idx] = charts[c].eval(z);
      ps[idx] = separable_measurement(xs[idx], a, blocks);
    }
  }

  double max_norm2 = 0.0;
  for (const auto& x : xs) max_norm2 = std::max(max_norm2, x.squaredNorm());
  const double floor2 = 1e-24 * std::max(max_norm2, kTiny);

  // local resolution: largest relative measurement gap to a grid neighbour.
  // Points next to the origin are unresolved (any neighbour pair there looks
  // far apart relative to its own scale).
  const auto count = static_cast<std::size_t>(total);
  std::vector<double> local_gap(count, 0.0);
  auto neighbour_gap = [&](std::size_t i, std::size_t j) {
    const double s2 = 0.5 * (xs[i].squaredNorm() + xs[j].squaredNorm());
    const double gap = xs[i].squaredNorm() > floor2 && xs[j].squaredNorm() > floor2
                           ? (ps[i] - ps[j]).norm() / s2
                           : std::numeric_limits<double>::infinity();
    local_gap[i] = std::max(local_gap[i], gap);
    local_gap[j] = std::max(local_gap[j], gap);
  };
  for (std::size_t c = 0; c < charts.size(); ++c) {
    const auto base = static_cast<std::size_t>(static_cast<Index>(c) * per_chart);
    for (Index p = 0; p < per_chart; ++p) {
      const auto i = base + static_cast<std::size_t>(p);
      if (p % g + 1 < g) neighbour_gap(i, i + 1);
      if (latent == 2 && p / g + 1 < g) neighbour_gap(i, i + static_cast<std::size_t>(g));
    }
  }
  const double resolved = options.resolve_fraction * options.separation_tol;

  // structure-of-arrays copies for the distance kernels
  std::vector<double> p_soa(count * static_cast<std::size_t>(r));
  std::vector<double> x_soa(count * static_cast<std::size_t>(n));
  std::vector<double> norm2(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (Index d = 0; d < r; ++d) p_soa[static_cast<std::size_t>(d) * count + i] = ps[i][d];
    for (Index d = 0; d < n; ++d) x_soa[static_cast<std::size_t>(d) * count + i] = xs[i][d];
    norm2[i] = xs[i].squaredNorm();
  }

  // grid stage: nominate the pairs that look best relative to the local grid
  // resolution, separately per octave of separation. Along a weakly sensitive
  // direction, pairs just past separation_tol look deceptively good and would
  // otherwise crowd out well-separated candidates.
  struct Candidate {
    double ratio;
    std::size_t i, j;
  };
  constexpr int kBands = 5;
  const auto keep = static_cast<std::size_t>(std::max(1, options.max_candidates));
  std::vector<std::vector<Candidate>> bands(kBands);  // each sorted by ratio, at most `keep`
  const auto& k = kernels::active();
  std::vector<double> dp(count), dminus(count), dplus(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!(local_gap[i] <= resolved)) continue;
    k.squared_distances_soa(p_soa.data(), count, static_cast<std::size_t>(r), ps[i].data(), dp.data());
    k.squared_distances_soa(x_soa.data(), count, static_cast<std::size_t>(n), xs[i].data(), dminus.data());
    const Vector neg = -xs[i];
    k.squared_distances_soa(x_soa.data(), count, static_cast<std::size_t>(n), neg.data(), dplus.data());
    for (std::size_t j = i + 1; j < count; ++j) {
      if (!(local_gap[j] <= resolved)) continue;
      const double s2 = 0.5 * (norm2[i] + norm2[j]);
      const double sep = std::sqrt(std::min(dminus[j], dplus[j]) / s2);
      if (sep <= options.separation_tol) continue;
      const double res = std::sqrt(dp[j]) / s2;
      const double threshold = std::max(options.residual_tol, options.gap_factor * std::max(local_gap[i], local_gap[j]));
      const double ratio = res / threshold;
      auto& band = bands[static_cast<std::size_t>(
          std::min<double>(kBands - 1, std::floor(std::log2(sep / options.separation_tol))))];
      if (band.size() == keep && ratio >= band.back().ratio) continue;
      const Candidate c{ratio, i, j};
      band.insert(std::upper_bound(band.begin(), band.end(), c,
                                   [](const Candidate& a, const Candidate& b) { return a.ratio < b.ratio; }),
                  c);
      if (band.size() > keep) band.pop_back();
    }
  }
  std::vector<Candidate> candidates;
  for (const auto& band : bands) candidates.insert(candidates.end(), band.begin(), band.end());
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.ratio < b.ratio; });

  CollisionReport report;
  report.converged = true;
  report.restarts_used = 0;
  report.decision_threshold = options.residual_tol;
  report.x = Signal::Zero(n);
  report.y = Signal::Zero(n);

  // polish stage: local Gauss-Newton on both latents, with a hinge keeping the
  // pair at least half its grid separation apart (unconstrained, real
  // collisions also slide onto the diagonal). A grid artefact stalls at a
  // nonzero residual; a real collision reaches rounding level.
  LeastSquaresOptions lsq;
  lsq.max_iterations = options.polish_iterations;
  lsq.cost_tol = 1e-32;
  const double sqrt_w = std::sqrt(options.polish_penalty_weight);
  double best_res = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    const auto& m1 = charts[c.i / static_cast<std::size_t>(per_chart)];
    const auto& m2 = charts[c.j / static_cast<std::size_t>(per_chart)];
    auto grid_latent = [&](std::size_t idx) {
      const Index p = static_cast<Index>(idx % static_cast<std::size_t>(per_chart));
      Vector z(latent);
      z[0] = grid_coord(p % g);
      if (latent == 2) z[1] = grid_coord(p / g);
      return z;
    };
    Vector start(2 * latent);
    start << grid_latent(c.i), grid_latent(c.j);
    const double s2_grid = 0.5 * (norm2[c.i] + norm2[c.j]);
    const double keep_sep =
        0.5 * std::min((xs[c.i] - xs[c.j]).norm(), (xs[c.i] + xs[c.j]).norm()) / std::sqrt(s2_grid);
    auto residual = [&](const Vector& q) -> Vector {
      const Signal x1 = m1.eval(q.head(latent)), x2 = m2.eval(q.tail(latent));
      Vector out(r + 1);
      const double s2 = 0.5 * (x1.squaredNorm() + x2.squaredNorm());
      if (s2 <= kTiny) {
        out.setZero();
        out[r] = sqrt_w * keep_sep;
        return out;
      }
      out.head(r) = (separable_measurement(x1, a, blocks) - separable_measurement(x2, a, blocks)) / s2;
      const double sep = std::min((x1 - x2).norm(), (x1 + x2).norm()) / std::sqrt(s2);
      out[r] = sqrt_w * std::max(0.0, keep_sep - sep);
      return out;
    };
    const auto fit = damped_gauss_newton(residual, start, lsq);
    const Signal x1 = m1.eval(fit.params.head(latent)), x2 = m2.eval(fit.params.tail(latent));
    const auto s = score_pair(x1, x2, separable_measurement(x1, a, blocks), separable_measurement(x2, a, blocks));
    auto polished = make_report(x1, x2, s, options.residual_tol, options.certify_separation_tol);
    polished.converged = fit.converged;
    ++report.restarts_used;
    if (polished.verdict == Verdict::collision) {
      polished.restarts_used = report.restarts_used;
      return polished;
    }
    if (s.relative_residual < best_res) {
      best_res = s.relative_residual;
      const int used = report.restarts_used;
      report = polished;
      report.restarts_used = used;
      report.converged = true;
    }
  }
  return report;
}

} // namespace sapr
