#pragma once

#include <cstdint>
#include <random>

#include "sapr/linalg.hpp"

namespace sapr {

using Rng = std::mt19937_64;

/// Deterministic child seed for independent sub-streams (restart k, cell j, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng{derive_seed(seed, stream)};
}

Vector gaussian_vector(Rng& rng, Index n);
Matrix gaussian_matrix(Rng& rng, Index rows, Index cols);

} // namespace sapr
