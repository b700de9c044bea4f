#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "latent.hpp"
#include "parallel.hpp"
#include "sapr/error.hpp"
#include "sapr/least_squares.hpp"
#include "sapr/mra.hpp"

namespace sapr {
namespace {

struct Chart {
  detail::LatentMap map;
  Matrix columns; // sparse charts are linear; empty for generators
};

std::vector<std::vector<Index>> choose_supports(Index n, Index m, std::size_t limit, Rng& rng) {
  // enumerate all supports when there are at most `limit` of them
  double count = 1.0;
  for (Index i = 0; i < m; ++i) count = count * double(n - i) / double(i + 1);
  std::vector<std::vector<Index>> out;
  if (count <= double(limit)) {
    std::vector<Index> s(static_cast<std::size_t>(m));
    std::iota(s.begin(), s.end(), Index{0});
    while (true) {
      out.push_back(s);
      Index i = m - 1;
      while (i >= 0 && s[static_cast<std::size_t>(i)] == n - m + i) --i;
      if (i < 0) break;
      ++s[static_cast<std::size_t>(i)];
      for (Index j = i + 1; j < m; ++j) s[static_cast<std::size_t>(j)] = s[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
  }
  for (std::size_t i = 0; i < limit; ++i) out.push_back(random_support(n, m, rng));
  return out;
}

} // namespace

double sign_aligned_error(const Signal& x_hat, const Signal& x_true) {
  if (x_hat.size() != x_true.size()) throw DimensionMismatch("sign_aligned_error: lengths differ");
  const double err = std::min((x_hat - x_true).norm(), (x_hat + x_true).norm());
  const double scale = x_true.norm();
  return scale > 0.0 ? err / scale : err;
}

double RecoveryResult::error(const Signal& x_true) const { return sign_aligned_error(x_hat, x_true); }

RecoveryResult recover(const MeasurementVector& invariants, const PriorModel& prior,
                       const MixingMatrix& a, const BlockStructure& blocks,
                       const RecoveryOptions& options, std::uint64_t seed) {
  if (invariants.size() != blocks.block_count())
    throw DimensionMismatch("recover: " + std::to_string(invariants.size()) + " invariants for " +
                            std::to_string(blocks.block_count()) + " blocks");
  if (prior_dim(prior) != a.dim() || a.dim() != blocks.dim())
    throw DimensionMismatch("recover: prior, mixing and blocks must share N");

  Rng support_rng = make_rng(seed, 0);
  std::vector<Chart> charts;
  int starts_per_chart = std::max(1, options.starts);
  if (const auto* net = std::get_if<GeneratorNetwork>(&prior)) {
    charts.push_back({detail::generator_map(*net), {}});
  } else {
    const auto& sparse = std::get<SparsePrior>(prior);
    for (auto& s : choose_supports(sparse.dim(), sparse.sparsity, options.max_supports, support_rng)) {
      Matrix cols(sparse.dim(), static_cast<Index>(s.size()));
      for (std::size_t i = 0; i < s.size(); ++i) cols.col(static_cast<Index>(i)) = sparse.basis.col(s[i]);
      charts.push_back({detail::sparse_map(sparse, s), cols});
    }
    starts_per_chart = std::max(2, options.starts / static_cast<int>(charts.size()));
  }

  const double energy = std::max(0.0, invariants.sum());
  const double done = 1e-30 * (1.0 + invariants.squaredNorm());
  LeastSquaresOptions ls;
  ls.max_iterations = options.max_iterations;
  ls.cost_tol = done;

  RecoveryResult best;
  best.cost = std::numeric_limits<double>::infinity();
  Rng start_rng = make_rng(seed, 1);
  for (const Chart& chart : charts) {
    const auto* net = std::get_if<GeneratorNetwork>(&prior);
    auto signal = [&](const Vector& z) -> Signal { return chart.map.eval(z); };
    auto residual = [&](const Vector& z) -> Vector {
      return separable_measurement(signal(z), a, blocks) - invariants;
    };
    auto jacobian = [&](const Vector& z) -> Matrix {
      const Matrix jx = measurement_jacobian(signal(z), a, blocks);
      return net ? Matrix(jx * generator_jacobian(*net, z)) : Matrix(jx * chart.columns);
    };
    for (int s = 0; s < starts_per_chart; ++s) {
      Vector z = gaussian_vector(start_rng, chart.map.dim);
      // match the start's energy to the measured total energy
      const double e0 = separable_measurement(signal(z), a, blocks).sum();
      if (e0 > 0.0) z *= std::sqrt(energy / e0);
      const auto fit = damped_gauss_newton(residual, z, ls, jacobian);
      best.converged = best.converged || fit.converged;
      if (fit.cost < best.cost) {
        best.cost = fit.cost;
        best.latent = fit.params;
        best.x_hat = a.apply(signal(fit.params));
      }
      if (best.cost <= done) return best;
    }
  }
  return best;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionMismatch("loglog_slope: lengths differ");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

namespace {

struct SeedState {
  std::uint64_t seed;
  ObservationStream stream;
  SecondMomentAccumulator acc;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

class SigmaCell {
public:
  SigmaCell(const Signal& x_true, const PriorModel& prior, const MixingMatrix& a,
            const GroupAction& group, const SampleComplexityOptions& options)
      : x_true_(x_true), prior_(prior), a_(a), group_(group), options_(options) {}

  // median sign-aligned error after advancing every stream to n observations
  double evaluate(std::vector<SeedState>& states, std::uint64_t n) const {
    std::vector<double> errors(states.size());
    std::vector<double> buffer(static_cast<std::size_t>(group_.dim()));
    for (std::size_t i = 0; i < states.size(); ++i) {
      SeedState& st = states[i];
      while (st.acc.count() < n) {
        st.stream.next(buffer.data());
        st.acc.add(buffer.data());
      }
      const auto invariants = extract_invariants(st.acc.estimate(st.stream.sigma()), group_.blocks());
      const auto fit = recover(invariants, prior_, a_, group_.blocks(), options_.recovery, derive_seed(st.seed, 7));
      errors[i] = fit.error(x_true_);
    }
    return median(errors);
  }

  SampleComplexityRow run(double sigma, const std::vector<std::uint64_t>& seeds) const {
    SampleComplexityRow row;
    row.sigma = sigma;
    row.seeds_used = static_cast<int>(seeds.size());
    std::vector<SeedState> states;
    for (auto s : seeds)
      states.push_back({s, ObservationStream(x_true_, group_, sigma, derive_seed(s, 0)),
                        SecondMomentAccumulator(group_.dim())});
    std::vector<SeedState> lo_states = states;
    std::uint64_t lo = 0;
    std::uint64_t hi = std::max<std::uint64_t>(1, options_.n_min);
    double hi_err = 0.0;
    while (true) {
      hi_err = evaluate(states, hi);
      row.grid_curve.emplace_back(hi, hi_err);
      if (hi_err <= options_.target_error) break;
      if (hi >= options_.n_cap) {
        row.saturated = true;
        row.n_star = hi;
        row.median_error = hi_err;
        return row;
      }
      lo = hi;
      lo_states = states;
      hi = std::min(options_.n_cap,
                    std::max(hi + 1, static_cast<std::uint64_t>(std::ceil(double(hi) * options_.grid_ratio))));
    }
    for (int step = 0; step < options_.bisection_steps && hi - lo > 1; ++step) {
      auto mid = lo == 0 ? hi / 2 : static_cast<std::uint64_t>(std::llround(std::sqrt(double(lo) * double(hi))));
      mid = std::clamp(mid, lo + 1, hi - 1);
      std::vector<SeedState> trial = lo_states;
      const double err = evaluate(trial, mid);
      if (err <= options_.target_error) {
        hi = mid;
        hi_err = err;
      } else {
        lo = mid;
        lo_states = std::move(trial);
      }
    }
    row.n_star = hi;
    row.median_error = hi_err;
    return row;
  }

private:
  const Signal& x_true_;
  const PriorModel& prior_;
  const MixingMatrix& a_;
  const GroupAction& group_;
  const SampleComplexityOptions& options_;
};

} // namespace

SampleComplexityTable sample_complexity_sweep(const Signal& x_true, const PriorModel& prior,
                                              const MixingMatrix& a, const GroupAction& group,
                                              const std::vector<double>& sigma_list,
                                              const std::vector<std::uint64_t>& seeds,
                                              const SampleComplexityOptions& options) {
  if (!(options.target_error > 0.0 && options.target_error < 1.0))
    throw InvalidInput("target_error must lie in (0, 1)");
  if (!std::is_sorted(sigma_list.begin(), sigma_list.end())) throw InvalidInput("sigma_list must be ascending");
  if (seeds.empty()) throw InvalidInput("sample-complexity sweep needs at least one seed");
  if (!(options.grid_ratio > 1.0)) throw InvalidInput("grid_ratio must exceed 1");
  if (x_true.size() != group.dim() || a.dim() != group.dim())
    throw DimensionMismatch("sample-complexity sweep: signal, mixing and group dimensions differ");

  SampleComplexityTable table;
  table.rows.resize(sigma_list.size());
  const SigmaCell cell(x_true, prior, a, group, options);
  detail::parallel_for(sigma_list.size(), options.threads,
                       [&](std::size_t i) { table.rows[i] = cell.run(sigma_list[i], seeds); });

  std::vector<double> xs, ys;
  for (const auto& r : table.rows)
    if (!r.saturated && r.sigma > 0.0) {
      xs.push_back(r.sigma);
      ys.push_back(static_cast<double>(r.n_star));
    }
  table.fitted_slope = loglog_slope(xs, ys);
  return table;
}

} // namespace sapr
