#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "sapr/linalg.hpp"
#include "sapr/measurements.hpp"
#include "sapr/priors.hpp"

namespace sapr {

enum class Verdict { collision, no_collision_found };

std::string_view to_string(Verdict verdict);

/// Both tolerances are scale-free: with s^2 = (|x|^2 + |y|^2)/2 the verdict
/// compares |P(x)-P(y)| / s^2 against residual_tol and
/// min(|x-y|, |x+y|) / s against separation_tol.
struct CollisionOptions {
  double residual_tol = 1e-8;
  double separation_tol = 1e-3;
  double penalty_weight = 1e2;
  int restarts = 200;
  int max_iterations = 500;
  /// Fix the first signal and search only over the second (generic-signal regime).
  std::optional<Signal> anchor;
};

struct CollisionReport {
  Signal x;
  Signal y;
  double residual = 0.0;            // |P(x;A) - P(y;A)|_2
  double separation = 0.0;          // min(|x-y|, |x+y|)
  double relative_residual = 0.0;
  double relative_separation = 0.0;
  Verdict verdict = Verdict::no_collision_found;
  int restarts_used = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  double decision_threshold = 0.0;  // relative residual threshold the verdict used
};

/// Scores an explicit pair under the collision tolerances.
CollisionReport evaluate_pair(const Signal& x, const Signal& y, const MixingMatrix& a,
                              const BlockStructure& blocks, const CollisionOptions& options = {});

/// Multi-start damped Gauss-Newton over pairs of latent points. Stops at the
/// first restart that certifies a collision.
CollisionReport collision_search(const PriorModel& prior, const MixingMatrix& a,
                                 const BlockStructure& blocks, const CollisionOptions& options,
                                 std::uint64_t seed);

struct OracleOptions {
  double residual_tol = 1e-8;
  /// Pairs closer than this (relative) are grid neighbours, not candidate collisions.
  double separation_tol = 0.1;
  /// A grid pair is a candidate when its relative residual is below gap_factor
  /// times the larger local neighbour gap of its two grid points.
  double gap_factor = 2.0;
  /// Grid points whose local gap exceeds resolve_fraction * separation_tol are
  /// too coarse to separate and are skipped.
  double resolve_fraction = 0.5;
  /// Best-ranked grid pairs handed to local polishing.
  int max_candidates = 32;
  int polish_iterations = 200;
  double polish_penalty_weight = 1e2;
  /// Separation a polished pair must keep to count as a collision.
  double certify_separation_tol = 1e-3;
};

/// Exhaustive pair check on a uniform latent grid over [-1, 1]^K, K <= 2. Grid
/// pairs within local resolution are polished by Gauss-Newton and certified
/// with residual_tol / certify_separation_tol.
CollisionReport brute_force_collision_oracle(const PriorModel& prior, const MixingMatrix& a,
                                             const BlockStructure& blocks, int grid_points_per_axis,
                                             const OracleOptions& options = {});

// ---------------------------------------------------------------------------
// Fibre dimension probe for {A : P(x;A) = P(y;A)}.

struct ProbeOptions {
  int max_restarts = 50;
  int max_newton_iterations = 200;
  double target_residual = 1e-13;
  double accept_residual = 1e-9;
  double rank_tol = 1e-6;
};

struct CodimensionEstimate {
  Index ambient_dim = 0;
  Index estimated_solution_dim = 0;
  Index theoretical_bound = 0;
  Index rank = 0;
  Vector singular_values;
  bool converged = false;
  double constraint_residual = 0.0;
  int restarts_used = 0;
  RowMatrix solution;
};

/// P(x;A) - P(y;A).
Vector fiber_constraints(const Signal& x, const Signal& y, const RowMatrix& a,
                         const BlockStructure& blocks);

/// dim GL(N) - R, or dim SO(N) - (R - 1).
Index theoretical_solution_bound(MixingKind manifold, const BlockStructure& blocks);

CodimensionEstimate codimension_probe(const Signal& x, const Signal& y, MixingKind manifold,
                                      const BlockStructure& blocks, std::uint64_t seed,
                                      const ProbeOptions& options = {});

// ---------------------------------------------------------------------------
// Threshold sweep.

enum class Regime { all_signals, generic_signals, below_threshold };

std::string_view to_string(Regime regime);

/// Uniqueness regime for a prior of dimension m measured through R blocks:
/// GL: R > 2m all, R > m generic; SO: R > 2m+1 all, R > m+1 generic.
/// With power-spectrum blocks these are N >= 4M / 2M and N >= 4M+2 / 2M+2.
Regime classify_regime(Index block_count, Index prior_dim, MixingKind kind);

enum class PriorFamilyType { relu, sparse };

struct PriorFamily {
  PriorFamilyType type = PriorFamilyType::relu;
  /// Hidden width of the relu family as a multiple of M (at least 2 wide).
  Index hidden_multiplier = 3;
  Index hidden_layers = 1;
};

PriorModel make_family_prior(const PriorFamily& family, Index n, Index m, std::uint64_t seed);

struct SweepRow {
  Index n = 0;
  Index m = 0;
  Regime regime = Regime::below_threshold;
  MixingKind kind = MixingKind::general_linear;
  std::uint64_t seed = 0;
  Verdict verdict = Verdict::no_collision_found;
  double residual = 0.0;
  double separation = 0.0;
};

struct SweepCell {
  Index n = 0;
  Index m = 0;
  Regime regime = Regime::below_threshold;
  double collision_fraction = 0.0;
  int instances = 0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::vector<SweepCell> cells;
};

/// Per (N, M, seed): fresh prior and mixing from the seed, power-spectrum
/// blocks, collision_search anchored at a random prior point unless the
/// regime is all-signals. Rows are ordered by (N, M, seed) regardless of threads.
SweepTable threshold_sweep(const PriorFamily& family, const std::vector<Index>& n_range,
                           const std::vector<Index>& m_range, MixingKind kind,
                           const std::vector<std::uint64_t>& seeds, const CollisionOptions& options,
                           int threads = 1);

} // namespace sapr
