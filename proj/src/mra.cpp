#include "sapr/mra.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "sapr/error.hpp"
#include "sapr/kernels.hpp"

namespace sapr {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// first row of the (cos_k, sin_k) pairs in real Fourier block coordinates
Index first_pair_row(Index n) { return n % 2 == 0 ? 2 : 1; }

void act_fourier(Index shift, bool reflect, const double* x, double* out, Index n,
                 const double* cos_table, const double* sin_table) {
  out[0] = x[0];
  if (n % 2 == 0) out[1] = (shift % 2 == 0) ? x[1] : -x[1];
  Index k = 1;
  for (Index row = first_pair_row(n); row < n; row += 2, ++k) {
    const double c = x[row];
    const double s = reflect ? -x[row + 1] : x[row + 1];
    const Index phase = (k * shift) % n;
    const double cp = cos_table[phase];
    const double sp = sin_table[phase];
    out[row] = c * cp - s * sp;
    out[row + 1] = s * cp + c * sp;
  }
}

void trig_tables(Index n, std::vector<double>& cos_table, std::vector<double>& sin_table) {
  cos_table.resize(static_cast<std::size_t>(n));
  sin_table.resize(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    const double angle = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
    cos_table[static_cast<std::size_t>(j)] = std::cos(angle);
    sin_table[static_cast<std::size_t>(j)] = std::sin(angle);
  }
}

void check_element(const GroupElement& g, const GroupAction& group) {
  if (group.kind() == GroupKind::so3) {
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(g.angles.alpha) || !finite(g.angles.beta) || !finite(g.angles.gamma))
      throw InvalidInput("Euler angles must be finite");
    return;
  }
  if (g.shift < 0 || g.shift >= group.dim())
    throw InvalidInput("shift " + std::to_string(g.shift) + " outside [0, " + std::to_string(group.dim()) + ")");
  if (g.reflect && group.kind() == GroupKind::cyclic) throw InvalidInput("cyclic group has no reflections");
}

// Golub-Welsch nodes and weights on [-1, 1]
void gauss_legendre(Index order, Vector& nodes, Vector& weights) {
  Matrix jacobi = Matrix::Zero(order, order);
  for (Index i = 1; i < order; ++i) {
    const double k = static_cast<double>(i);
    jacobi(i, i - 1) = jacobi(i - 1, i) = k / std::sqrt(4.0 * k * k - 1.0);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(jacobi);
  nodes = eig.eigenvalues();
  weights = 2.0 * eig.eigenvectors().row(0).transpose().array().square();
}

} // namespace

std::string_view to_string(GroupKind kind) {
  switch (kind) {
  case GroupKind::cyclic: return "cyclic";
  case GroupKind::dihedral: return "dihedral";
  case GroupKind::so3: return "so3";
  }
  return "?";
}

GroupKind parse_group_kind(std::string_view text) {
  if (text == "cyclic") return GroupKind::cyclic;
  if (text == "dihedral") return GroupKind::dihedral;
  if (text == "so3" || text == "so3-bandlimited") return GroupKind::so3;
  throw InvalidInput("unknown group kind '" + std::string(text) + "'");
}

GroupAction::GroupAction(GroupKind kind, Index dim, Index band_limit, BlockStructure blocks)
    : kind_(kind), dim_(dim), band_limit_(band_limit), blocks_(std::move(blocks)) {}

GroupAction GroupAction::cyclic(Index n) {
  if (n < 1) throw InvalidDimension("cyclic group needs N >= 1");
  return {GroupKind::cyclic, n, -1, BlockStructure::power_spectrum(n)};
}

GroupAction GroupAction::dihedral(Index n) {
  if (n < 1) throw InvalidDimension("dihedral group needs N >= 1");
  return {GroupKind::dihedral, n, -1, BlockStructure::power_spectrum(n)};
}

GroupAction GroupAction::so3(Index band_limit) {
  if (band_limit < 0) throw InvalidDimension("band limit must be >= 0");
  if (band_limit > kMaxBandLimit)
    throw Unsupported("band limit above " + std::to_string(kMaxBandLimit) + " is not supported");
  return {GroupKind::so3, (band_limit + 1) * (band_limit + 1), band_limit, BlockStructure::spherical(band_limit)};
}

Signal act(const GroupElement& g, const Signal& x, const GroupAction& group) {
  if (x.size() != group.dim())
    throw DimensionMismatch("act: signal has length " + std::to_string(x.size()) + ", group acts on " +
                            std::to_string(group.dim()));
  check_element(g, group);
  if (group.kind() == GroupKind::so3) return wigner_block(group.band_limit(), g.angles) * x;
  std::vector<double> cos_table, sin_table;
  trig_tables(group.dim(), cos_table, sin_table);
  Signal out(x.size());
  act_fourier(g.shift, g.reflect, x.data(), out.data(), x.size(), cos_table.data(), sin_table.data());
  return out;
}

Matrix action_matrix(const GroupElement& g, const GroupAction& group) {
  check_element(g, group);
  if (group.kind() == GroupKind::so3) return wigner_block(group.band_limit(), g.angles);
  Matrix out(group.dim(), group.dim());
  for (Index j = 0; j < group.dim(); ++j) out.col(j) = act(g, Signal::Unit(group.dim(), j), group);
  return out;
}

GroupElement sample_group_element(const GroupAction& group, Rng& rng) {
  GroupElement g;
  switch (group.kind()) {
  case GroupKind::cyclic:
    g.shift = std::uniform_int_distribution<Index>(0, group.dim() - 1)(rng);
    break;
  case GroupKind::dihedral:
    g.shift = std::uniform_int_distribution<Index>(0, group.dim() - 1)(rng);
    g.reflect = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    break;
  case GroupKind::so3: {
    std::uniform_real_distribution<double> angle(0.0, kTwoPi);
    std::uniform_real_distribution<double> cosine(-1.0, 1.0);
    g.angles.alpha = angle(rng);
    g.angles.beta = std::acos(cosine(rng));
    g.angles.gamma = angle(rng);
    break;
  }
  }
  return g;
}

ObservationStream::ObservationStream(Signal x, GroupAction group, double sigma, std::uint64_t seed)
    : x_(std::move(x)), group_(std::move(group)), sigma_(sigma), rng_(make_rng(seed)) {
  if (x_.size() != group_.dim())
    throw DimensionMismatch("observation stream: signal length " + std::to_string(x_.size()) +
                            " does not match group dimension " + std::to_string(group_.dim()));
  if (!(sigma_ >= 0.0)) throw InvalidInput("sigma must be >= 0");
  if (group_.kind() != GroupKind::so3) trig_tables(group_.dim(), cos_table_, sin_table_);
}

void ObservationStream::next(double* out) {
  const GroupElement g = sample_group_element(group_, rng_);
  const Index n = x_.size();
  if (group_.kind() == GroupKind::so3) {
    const Vector rotated = wigner_block(group_.band_limit(), g.angles) * x_;
    std::copy(rotated.data(), rotated.data() + n, out);
  } else {
    act_fourier(g.shift, g.reflect, x_.data(), out, n, cos_table_.data(), sin_table_.data());
  }
  // noise is drawn even at sigma = 0 so streams at different sigma share group draws
  for (Index i = 0; i < n; ++i) out[i] += sigma_ * normal_(rng_);
  ++produced_;
}

MRAObservationSet simulate_observations(const Signal& x, const GroupAction& group, Index n,
                                        double sigma, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("simulate_observations needs n >= 1");
  ObservationStream stream(x, group, sigma, seed);
  MRAObservationSet obs;
  obs.observations.resize(n, group.dim());
  for (Index i = 0; i < n; ++i) stream.next(obs.observations.row(i).data());
  obs.sigma = sigma;
  obs.group = group;
  obs.seed = seed;
  obs.true_signal = x;
  return obs;
}

SecondMomentAccumulator::SecondMomentAccumulator(Index dim, Index chunk)
    : dim_(dim), chunk_size_(std::max<Index>(1, chunk)),
      total_(static_cast<std::size_t>(dim * dim), 0.0), chunk_(static_cast<std::size_t>(dim * dim), 0.0) {
  if (dim < 1) throw InvalidDimension("accumulator needs dim >= 1");
}

void SecondMomentAccumulator::add(const double* y) {
  kernels::active().rank1_update(chunk_.data(), static_cast<std::size_t>(dim_), y, 1.0);
  ++count_;
  if (++in_chunk_ == chunk_size_) {
    for (std::size_t i = 0; i < total_.size(); ++i) total_[i] += chunk_[i];
    std::fill(chunk_.begin(), chunk_.end(), 0.0);
    in_chunk_ = 0;
  }
}

SecondMomentEstimate SecondMomentAccumulator::estimate(double sigma) const {
  if (count_ == 0) throw InvalidInput("second-moment estimate needs at least one observation");
  SecondMomentEstimate est;
  est.n_used = static_cast<Index>(count_);
  est.sigma_assumed = sigma;
  est.matrix.resize(dim_, dim_);
  const double inv = 1.0 / static_cast<double>(count_);
  for (Index i = 0; i < dim_; ++i)
    for (Index j = 0; j < dim_; ++j) {
      const auto k = static_cast<std::size_t>(i * dim_ + j);
      est.matrix(i, j) = (total_[k] + chunk_[k]) * inv;
    }
  est.matrix = 0.5 * (est.matrix + est.matrix.transpose()).eval();
  est.matrix.diagonal().array() -= sigma * sigma;
  return est;
}

SecondMomentEstimate estimate_second_moment(const MRAObservationSet& obs) {
  if (obs.count() < 1) throw InvalidInput("estimate_second_moment needs n >= 1");
  SecondMomentAccumulator acc(obs.observations.cols());
  for (Index i = 0; i < obs.count(); ++i) acc.add(obs.observations.row(i).data());
  return acc.estimate(obs.sigma);
}

Matrix population_second_moment(const Signal& x, const GroupAction& group) {
  if (x.size() != group.dim()) throw DimensionMismatch("population_second_moment: signal/group dimension");
  const Index n = group.dim();
  Matrix m = Matrix::Zero(n, n);
  if (group.kind() != GroupKind::so3) {
    const bool dihedral = group.kind() == GroupKind::dihedral;
    const int flips = dihedral ? 2 : 1;
    for (int r = 0; r < flips; ++r)
      for (Index s = 0; s < n; ++s) {
        const Signal y = act(GroupElement{s, r == 1, {}}, x, group);
        m.noalias() += y * y.transpose();
      }
    return m / static_cast<double>(flips * n);
  }
  // integrands are trigonometric of degree <= 2L in each angle
  const Index band = group.band_limit();
  const Index n_beta = band + 1;
  const Index n_angle = 2 * band + 1;
  Vector nodes, weights;
  gauss_legendre(n_beta, nodes, weights);
  for (Index b = 0; b < n_beta; ++b) {
    const double beta = std::acos(nodes[b]);
    const double wb = 0.5 * weights[b];
    for (Index ia = 0; ia < n_angle; ++ia)
      for (Index ig = 0; ig < n_angle; ++ig) {
        const EulerAngles e{kTwoPi * double(ia) / double(n_angle), beta, kTwoPi * double(ig) / double(n_angle)};
        const Signal y = wigner_block(band, e) * x;
        m.noalias() += (wb / double(n_angle * n_angle)) * (y * y.transpose());
      }
  }
  return m;
}

MeasurementVector extract_invariants(const Matrix& moment, const BlockStructure& blocks) {
  if (moment.rows() != blocks.dim() || moment.cols() != blocks.dim())
    throw DimensionMismatch("extract_invariants: moment is " + std::to_string(moment.rows()) + "x" +
                            std::to_string(moment.cols()) + ", blocks span " + std::to_string(blocks.dim()));
  MeasurementVector out(blocks.block_count());
  for (Index k = 0; k < blocks.block_count(); ++k)
    out[k] = moment.diagonal().segment(blocks.offset(k), blocks.block_dim(k)).sum();
  return out;
}

MeasurementVector extract_invariants(const SecondMomentEstimate& est, const BlockStructure& blocks) {
  return extract_invariants(est.matrix, blocks);
}

} // namespace sapr
