#pragma once

#include <functional>
#include <vector>

#include "sapr/priors.hpp"

namespace sapr::detail {

/// A prior restricted to a smooth chart: latent vector -> signal.
struct LatentMap {
  Index dim = 0;
  std::function<Signal(const Vector&)> eval;
};

inline LatentMap generator_map(const GeneratorNetwork& net) {
  return {net.latent_dim(), [&net](const Vector& z) { return generator_forward(net, z); }};
}

inline LatentMap sparse_map(const SparsePrior& prior, std::vector<Index> support) {
  Matrix columns(prior.dim(), static_cast<Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i) columns.col(static_cast<Index>(i)) = prior.basis.col(support[i]);
  return {static_cast<Index>(support.size()), [columns](const Vector& c) -> Signal { return columns * c; }};
}

/// Generators map directly; sparse priors get a random support drawn from rng.
inline LatentMap random_latent_map(const PriorModel& prior, Rng& rng) {
  if (const auto* net = std::get_if<GeneratorNetwork>(&prior)) return generator_map(*net);
  const auto& sparse = std::get<SparsePrior>(prior);
  return sparse_map(sparse, random_support(sparse.dim(), sparse.sparsity, rng));
}

} // namespace sapr::detail
