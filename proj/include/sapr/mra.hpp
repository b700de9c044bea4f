#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "sapr/linalg.hpp"
#include "sapr/measurements.hpp"
#include "sapr/priors.hpp"
#include "sapr/random.hpp"
#include "sapr/wigner.hpp"

namespace sapr {

enum class GroupKind : std::uint32_t { cyclic = 1, dihedral = 2, so3 = 3 };

std::string_view to_string(GroupKind kind);
GroupKind parse_group_kind(std::string_view text);

/// A group acting orthogonally on R^N in block coordinates. Cyclic and
/// dihedral groups act on real Fourier coefficients of length-N signals;
/// so3 acts on coefficients of L-band-limited spherical functions.
class GroupAction {
public:
  static GroupAction cyclic(Index n);
  static GroupAction dihedral(Index n);
  static GroupAction so3(Index band_limit);

  GroupKind kind() const { return kind_; }
  Index dim() const { return dim_; }
  Index band_limit() const { return band_limit_; }
  const BlockStructure& blocks() const { return blocks_; }

private:
  GroupAction(GroupKind kind, Index dim, Index band_limit, BlockStructure blocks);

  GroupKind kind_;
  Index dim_;
  Index band_limit_;
  BlockStructure blocks_;
};

/// Cyclic: shift. Dihedral: reflect (v[t] -> v[-t]) and then shift. so3: Euler angles.
struct GroupElement {
  Index shift = 0;
  bool reflect = false;
  EulerAngles angles;
};

Signal act(const GroupElement& g, const Signal& x, const GroupAction& group);

/// Matrix of act(g, ., group).
Matrix action_matrix(const GroupElement& g, const GroupAction& group);

/// Uniform (Haar) draw.
GroupElement sample_group_element(const GroupAction& group, Rng& rng);

struct MRAObservationSet {
  RowMatrix observations; // n x N
  double sigma = 0.0;
  GroupAction group = GroupAction::cyclic(1);
  std::uint64_t seed = 0;
  std::optional<Signal> true_signal;

  Index count() const { return observations.rows(); }
};

/// Endless observation generator. Element i of the stream equals row i of
/// simulate_observations with the same (x, group, sigma, seed); copying the
/// stream snapshots its state.
class ObservationStream {
public:
  ObservationStream(Signal x, GroupAction group, double sigma, std::uint64_t seed);

  void next(double* out);
  std::uint64_t produced() const { return produced_; }
  const GroupAction& group() const { return group_; }
  double sigma() const { return sigma_; }

private:
  Signal x_;
  GroupAction group_;
  double sigma_;
  Rng rng_;
  std::normal_distribution<double> normal_;
  std::vector<double> cos_table_;
  std::vector<double> sin_table_;
  std::uint64_t produced_ = 0;
};

MRAObservationSet simulate_observations(const Signal& x, const GroupAction& group, Index n,
                                        double sigma, std::uint64_t seed);

struct SecondMomentEstimate {
  Matrix matrix;
  Index n_used = 0;
  double sigma_assumed = 0.0;
};

/// Running sum of y y^T. Observations are summed in fixed-size chunks which are
/// then added to the total, so the result depends only on the observation order.
class SecondMomentAccumulator {
public:
  explicit SecondMomentAccumulator(Index dim, Index chunk = 1024);

  void add(const double* y);
  std::uint64_t count() const { return count_; }
  Index dim() const { return dim_; }

  /// (1/n) sum y y^T - sigma^2 I, symmetrized.
  SecondMomentEstimate estimate(double sigma) const;

private:
  Index dim_;
  Index chunk_size_;
  std::vector<double> total_;
  std::vector<double> chunk_;
  Index in_chunk_ = 0;
  std::uint64_t count_ = 0;
};

SecondMomentEstimate estimate_second_moment(const MRAObservationSet& obs);

/// Exact orbit average of (g x)(g x)^T: enumeration for cyclic/dihedral,
/// Gauss-Legendre(cos beta) x trapezoid(alpha, gamma) for so3.
Matrix population_second_moment(const Signal& x, const GroupAction& group);

/// Entry l = trace of the l-th diagonal block.
MeasurementVector extract_invariants(const Matrix& moment, const BlockStructure& blocks);
MeasurementVector extract_invariants(const SecondMomentEstimate& est, const BlockStructure& blocks);

struct RecoveryOptions {
  int starts = 16;
  int max_iterations = 200;
  std::size_t max_supports = 64; // sparse priors: supports tried (all if fewer)
};

struct RecoveryResult {
  Signal x_hat;
  Vector latent;
  double cost = 0.0;
  bool converged = false;

  /// min(|x_hat - x|, |x_hat + x|) / |x|; the absolute error when x = 0.
  double error(const Signal& x_true) const;
};

double sign_aligned_error(const Signal& x_hat, const Signal& x_true);

RecoveryResult recover(const MeasurementVector& invariants, const PriorModel& prior,
                       const MixingMatrix& a, const BlockStructure& blocks,
                       const RecoveryOptions& options, std::uint64_t seed);

struct SampleComplexityOptions {
  double target_error = 0.1;
  std::uint64_t n_min = 1;
  std::uint64_t n_cap = 10'000'000;
  double grid_ratio = 2.0;
  int bisection_steps = 8;
  RecoveryOptions recovery;
  int threads = 1;
};

struct SampleComplexityRow {
  double sigma = 0.0;
  std::uint64_t n_star = 0;
  double median_error = 0.0;
  int seeds_used = 0;
  bool saturated = false;
  // (n, median error) at every grid point visited before bracketing
  std::vector<std::pair<std::uint64_t, double>> grid_curve;
};

struct SampleComplexityTable {
  std::vector<SampleComplexityRow> rows;
  double fitted_slope = 0.0; // NaN if fewer than two unsaturated rows
};

/// x_true must lie in the image of A x(.) over the prior; each seed draws its own
/// observation stream, and recovery runs on the extracted invariants.
SampleComplexityTable sample_complexity_sweep(const Signal& x_true, const PriorModel& prior,
                                              const MixingMatrix& a, const GroupAction& group,
                                              const std::vector<double>& sigma_list,
                                              const std::vector<std::uint64_t>& seeds,
                                              const SampleComplexityOptions& options);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Binary format: "MRA1", N u64, n u64, sigma f64, group tag u32, seed u64, then
// n*N float64 row-major; little-endian.
void save_observations(const MRAObservationSet& obs, const std::filesystem::path& path);
MRAObservationSet load_observations(const std::filesystem::path& path);

} // namespace sapr
