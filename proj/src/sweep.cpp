#include <algorithm>
#include <string>

#include "parallel.hpp"
#include "sapr/error.hpp"
#include "sapr/injectivity.hpp"

namespace sapr {

std::string_view to_string(Regime regime) {
  switch (regime) {
  case Regime::all_signals: return "all-signals";
  case Regime::generic_signals: return "generic-signals";
  case Regime::below_threshold: return "below-threshold";
  }
  return "below-threshold";
}

Regime classify_regime(Index block_count, Index prior_dim, MixingKind kind) {
  const Index slack = kind == MixingKind::special_orthogonal ? 1 : 0;
  if (block_count > 2 * prior_dim + slack) return Regime::all_signals;
  if (block_count > prior_dim + slack) return Regime::generic_signals;
  return Regime::below_threshold;
}

PriorModel make_family_prior(const PriorFamily& family, Index n, Index m, std::uint64_t seed) {
  if (m < 1 || m > n) throw InvalidDimension("family prior needs 1 <= M <= N");
  if (family.type == PriorFamilyType::sparse) return SparsePrior::standard(n, m);
  std::vector<Index> widths{m};
  const Index hidden = std::max<Index>(2, family.hidden_multiplier * m);
  for (Index l = 0; l < family.hidden_layers; ++l) widths.push_back(hidden);
  widths.push_back(n);
  return random_generator(widths, Activation::relu(), seed);
}

SweepTable threshold_sweep(const PriorFamily& family, const std::vector<Index>& n_range,
                           const std::vector<Index>& m_range, MixingKind kind,
                           const std::vector<std::uint64_t>& seeds, const CollisionOptions& options,
                           int threads) {
  for (Index n : n_range)
    if (n < 1 || n > 32) throw InvalidInput("threshold_sweep keeps N in [1, 32], got " + std::to_string(n));

  struct Task {
    Index n, m;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (Index n : n_range)
    for (Index m : m_range)
      if (m >= 1 && m < n)
        for (auto seed : seeds) tasks.push_back({n, m, seed});

  SweepTable table;
  table.rows.resize(tasks.size());
  detail::parallel_for(tasks.size(), threads, [&](std::size_t i) {
    const Task& t = tasks[i];
    const auto blocks = BlockStructure::power_spectrum(t.n);
    const Regime regime = classify_regime(blocks.block_count(), t.m, kind);
    const PriorModel prior = make_family_prior(family, t.n, t.m, derive_seed(t.seed, 1));
    const MixingMatrix a = sample_mixing(t.n, kind, derive_seed(t.seed, 2));

    CollisionOptions opts = options;
    if (regime != Regime::all_signals) {
      if (const auto* net = std::get_if<GeneratorNetwork>(&prior)) {
        Rng rng = make_rng(t.seed, 3);
        opts.anchor = generator_forward(*net, gaussian_vector(rng, net->latent_dim()));
      } else {
        opts.anchor = sample_sparse(std::get<SparsePrior>(prior), derive_seed(t.seed, 3));
      }
    }
    const auto report = collision_search(prior, a, blocks, opts, derive_seed(t.seed, 4));
    table.rows[i] = SweepRow{t.n, t.m, regime, kind, t.seed, report.verdict, report.residual, report.separation};
  });

  for (const auto& row : table.rows) {
    if (table.cells.empty() || table.cells.back().n != row.n || table.cells.back().m != row.m)
      table.cells.push_back(SweepCell{row.n, row.m, row.regime, 0.0, 0});
    auto& cell = table.cells.back();
    cell.collision_fraction += row.verdict == Verdict::collision ? 1.0 : 0.0;
    ++cell.instances;
  }
  for (auto& cell : table.cells) cell.collision_fraction /= std::max(1, cell.instances);
  return table;
}

} // namespace sapr
