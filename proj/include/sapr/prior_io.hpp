#pragma once

#include <filesystem>

#include <json.hpp>

#include "sapr/priors.hpp"

namespace sapr {

// GeneratorNetwork:
//   {"latent_dim": K, "layers": [{"rows", "cols", "data" (row-major), "activation",
//     optional "bias", "slope", "lo", "hi"}]}
// SparsePrior:
//   {"basis" (row-major N*N), "sparsity": M, "kind": "standard-basis" | ...}
nlohmann::json to_json(const GeneratorNetwork& net);
nlohmann::json to_json(const SparsePrior& prior);
GeneratorNetwork generator_from_json(const nlohmann::json& j);
SparsePrior sparse_prior_from_json(const nlohmann::json& j);

/// Dispatches on the presence of "layers" vs "basis".
PriorModel prior_from_json(const nlohmann::json& j);
PriorModel load_prior(const std::filesystem::path& path);

} // namespace sapr
