#pragma once

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include "sapr/linalg.hpp"
#include "sapr/measurements.hpp"
#include "sapr/random.hpp"

namespace sapr {

enum class ActivationKind { relu, leaky_relu, hardtanh, identity };

std::string_view to_string(ActivationKind kind);
ActivationKind parse_activation(std::string_view text);

/// Piecewise-linear (hence semi-algebraic) activation. Derivatives at kinks
/// take the left-hand value (ReLU'(0) = 0).
struct Activation {
  ActivationKind kind = ActivationKind::identity;
  double slope = 0.01;  // leaky-relu negative slope
  double lo = -1.0;     // hardtanh clamp
  double hi = 1.0;

  static Activation relu() { return {ActivationKind::relu}; }
  static Activation identity() { return {ActivationKind::identity}; }
  static Activation leaky_relu(double slope) { return {ActivationKind::leaky_relu, slope}; }
  static Activation hardtanh(double lo, double hi) { return {ActivationKind::hardtanh, 0.01, lo, hi}; }

  double apply(double v) const;
  double derivative(double v) const;
};

struct Layer {
  Matrix weights;  // out x in
  Vector bias;     // empty = no bias
  Activation activation;
};

/// x = sigma_l(W_l ... sigma_1(W_1 z)); the last activation is normally identity.
class GeneratorNetwork {
public:
  explicit GeneratorNetwork(std::vector<Layer> layers);

  Index latent_dim() const { return layers_.front().weights.cols(); }
  Index output_dim() const { return layers_.back().weights.rows(); }
  /// Smallest width over the latent space and every hidden layer.
  Index min_width() const;
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }

private:
  std::vector<Layer> layers_;
};

/// Gaussian weights scaled by 1/sqrt(fan_in), no biases; widths = (K, N_1, ..., N).
/// `activation` is applied after every layer except the last.
GeneratorNetwork random_generator(const std::vector<Index>& widths, Activation activation,
                                  std::uint64_t seed);

/// Adds i.i.d. Gaussian noise of relative Frobenius size `relative_scale` to the final layer.
GeneratorNetwork perturb_final_layer(const GeneratorNetwork& net, double relative_scale,
                                     std::uint64_t seed);

Signal generator_forward(const GeneratorNetwork& net, const Vector& z);

/// N x K Jacobian by the activation-pattern chain rule.
Matrix generator_jacobian(const GeneratorNetwork& net, const Vector& z);

struct DimensionEstimate {
  Index value = 0;
  Vector singular_values;
  int trials = 0;
};

/// Max over `trials` Gaussian latent points of the numerical Jacobian rank
/// (singular values above rank_tol * largest).
DimensionEstimate estimate_image_dimension(const GeneratorNetwork& net, int trials,
                                           std::uint64_t seed, double rank_tol = 1e-6);

enum class SparseKind { standard_basis, generic_orthonormal, generic_linear };

std::string_view to_string(SparseKind kind);
SparseKind parse_sparse_kind(std::string_view text);

/// Signals x = B c with c supported on M coordinates.
struct SparsePrior {
  Matrix basis;
  Index sparsity = 1;
  SparseKind kind = SparseKind::standard_basis;

  SparsePrior(Matrix basis, Index sparsity, SparseKind kind);

  Index dim() const { return basis.rows(); }

  static SparsePrior standard(Index n, Index m);
  /// Random basis: Haar orthonormal or Gaussian invertible depending on kind.
  static SparsePrior generic(Index n, Index m, SparseKind kind, std::uint64_t seed);
};

/// Uniform size-M support, i.i.d. standard Gaussian coefficients.
Signal sample_sparse(const SparsePrior& prior, std::uint64_t seed);

std::vector<Index> random_support(Index n, Index m, Rng& rng);

using PriorModel = std::variant<GeneratorNetwork, SparsePrior>;

Index prior_dim(const PriorModel& prior);
/// Latent parameter count (K for networks, M for sparse priors).
Index prior_latent_dim(const PriorModel& prior);

/// general-linear: Gaussian, retried while ill-conditioned; special-orthogonal:
/// Haar on SO(N) via sign-corrected QR and a row flip when det = -1.
MixingMatrix sample_mixing(Index n, MixingKind kind, std::uint64_t seed);

/// Haar-distributed orthogonal matrix with det = +1.
Matrix haar_rotation(Index n, Rng& rng);

} // namespace sapr
