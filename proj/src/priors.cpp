#include "sapr/priors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sapr/error.hpp"

namespace sapr {

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
  case ActivationKind::relu: return "relu";
  case ActivationKind::leaky_relu: return "leaky-relu";
  case ActivationKind::hardtanh: return "hardtanh";
  case ActivationKind::identity: return "identity";
  }
  return "identity";
}

ActivationKind parse_activation(std::string_view text) {
  if (text == "relu") return ActivationKind::relu;
  if (text == "leaky-relu") return ActivationKind::leaky_relu;
  if (text == "hardtanh") return ActivationKind::hardtanh;
  if (text == "identity" || text == "linear") return ActivationKind::identity;
  throw InvalidInput("unknown activation '" + std::string(text) + "'");
}

double Activation::apply(double v) const {
  switch (kind) {
  case ActivationKind::relu: return v > 0.0 ? v : 0.0;
  case ActivationKind::leaky_relu: return v > 0.0 ? v : slope * v;
  case ActivationKind::hardtanh: return std::clamp(v, lo, hi);
  case ActivationKind::identity: return v;
  }
  return v;
}

double Activation::derivative(double v) const {
  switch (kind) {
  case ActivationKind::relu: return v > 0.0 ? 1.0 : 0.0;
  case ActivationKind::leaky_relu: return v > 0.0 ? 1.0 : slope;
  case ActivationKind::hardtanh: return (v > lo && v < hi) ? 1.0 : 0.0;
  case ActivationKind::identity: return 1.0;
  }
  return 1.0;
}

GeneratorNetwork::GeneratorNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw InvalidDimension("generator needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    if (layer.weights.rows() < 1 || layer.weights.cols() < 1)
      throw InvalidDimension("layer " + std::to_string(i) + " has an empty weight matrix");
    if (layer.bias.size() != 0 && layer.bias.size() != layer.weights.rows())
      throw DimensionMismatch("layer " + std::to_string(i) + " bias length does not match its rows");
    if (i > 0 && layer.weights.cols() != layers_[i - 1].weights.rows())
      throw DimensionMismatch("layer " + std::to_string(i) + " input width " +
                              std::to_string(layer.weights.cols()) + " != previous output width " +
                              std::to_string(layers_[i - 1].weights.rows()));
  }
}

Index GeneratorNetwork::min_width() const {
  Index w = latent_dim();
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) w = std::min(w, layers_[i].weights.rows());
  return w;
}

GeneratorNetwork random_generator(const std::vector<Index>& widths, Activation activation,
                                  std::uint64_t seed) {
  if (widths.size() < 2) throw InvalidDimension("random_generator needs at least (K, N)");
  Rng rng = make_rng(seed);
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    Layer layer;
    layer.weights = gaussian_matrix(rng, widths[i + 1], widths[i]) / std::sqrt(static_cast<double>(widths[i]));
    layer.activation = (i + 2 == widths.size()) ? Activation::identity() : activation;
    layers.push_back(std::move(layer));
  }
  return GeneratorNetwork(std::move(layers));
}

GeneratorNetwork perturb_final_layer(const GeneratorNetwork& net, double relative_scale,
                                     std::uint64_t seed) {
  GeneratorNetwork out = net;
  Matrix& w = out.mutable_layers().back().weights;
  Rng rng = make_rng(seed);
  const Matrix noise = gaussian_matrix(rng, w.rows(), w.cols());
  const double scale = relative_scale * w.norm() / std::max(noise.norm(), 1e-300);
  w += scale * noise;
  return out;
}

Signal generator_forward(const GeneratorNetwork& net, const Vector& z) {
  if (z.size() != net.latent_dim())
    throw DimensionMismatch("generator latent dimension is " + std::to_string(net.latent_dim()) +
                            ", got " + std::to_string(z.size()));
  Vector h = z;
  for (const auto& layer : net.layers()) {
    Vector pre = layer.weights * h;
    if (layer.bias.size() != 0) pre += layer.bias;
    h = pre.unaryExpr([&](double v) { return layer.activation.apply(v); });
  }
  return h;
}

Matrix generator_jacobian(const GeneratorNetwork& net, const Vector& z) {
  if (z.size() != net.latent_dim()) throw DimensionMismatch("generator_jacobian: latent dimension");
  Vector h = z;
  Matrix jac = Matrix::Identity(z.size(), z.size());
  for (const auto& layer : net.layers()) {
    Vector pre = layer.weights * h;
    if (layer.bias.size() != 0) pre += layer.bias;
    const Vector slope = pre.unaryExpr([&](double v) { return layer.activation.derivative(v); });
    jac = slope.asDiagonal() * (layer.weights * jac);
    h = pre.unaryExpr([&](double v) { return layer.activation.apply(v); });
  }
  return jac;
}

DimensionEstimate estimate_image_dimension(const GeneratorNetwork& net, int trials,
                                           std::uint64_t seed, double rank_tol) {
  if (trials < 1) throw InvalidInput("estimate_image_dimension needs trials >= 1");
  Rng rng = make_rng(seed);
  DimensionEstimate best;
  best.trials = trials;
  best.singular_values = Vector::Zero(std::min(net.latent_dim(), net.output_dim()));
  for (int t = 0; t < trials; ++t) {
    const Vector z = gaussian_vector(rng, net.latent_dim());
    Eigen::JacobiSVD<Matrix> svd(generator_jacobian(net, z));
    const Vector s = svd.singularValues();
    Index rank = 0;
    if (s.size() > 0 && s[0] > 0.0)
      for (Index i = 0; i < s.size(); ++i) rank += s[i] > rank_tol * s[0] ? 1 : 0;
    if (t == 0 || rank > best.value) {
      best.value = rank;
      best.singular_values = s;
    }
  }
  return best;
}

std::string_view to_string(SparseKind kind) {
  switch (kind) {
  case SparseKind::standard_basis: return "standard-basis";
  case SparseKind::generic_orthonormal: return "generic-orthonormal";
  case SparseKind::generic_linear: return "generic-linear";
  }
  return "standard-basis";
}

SparseKind parse_sparse_kind(std::string_view text) {
  if (text == "standard-basis") return SparseKind::standard_basis;
  if (text == "generic-orthonormal") return SparseKind::generic_orthonormal;
  if (text == "generic-linear") return SparseKind::generic_linear;
  throw InvalidInput("unknown sparse prior kind '" + std::string(text) + "'");
}

SparsePrior::SparsePrior(Matrix b, Index m, SparseKind k)
    : basis(std::move(b)), sparsity(m), kind(k) {
  const Index n = basis.rows();
  if (n < 1 || basis.cols() != n) throw InvalidDimension("sparse prior basis must be square");
  if (sparsity < 1 || sparsity > n)
    throw InvalidDimension("sparsity must satisfy 1 <= M <= N, got M=" + std::to_string(sparsity));
  if (kind == SparseKind::generic_orthonormal &&
      (basis.transpose() * basis - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10)
    throw InvalidInput("generic-orthonormal sparse prior needs B^T B = I");
}

SparsePrior SparsePrior::standard(Index n, Index m) {
  return SparsePrior(Matrix::Identity(n, n), m, SparseKind::standard_basis);
}

SparsePrior SparsePrior::generic(Index n, Index m, SparseKind kind, std::uint64_t seed) {
  switch (kind) {
  case SparseKind::standard_basis: return standard(n, m);
  case SparseKind::generic_orthonormal: {
    Rng rng = make_rng(seed);
    return SparsePrior(haar_rotation(n, rng), m, kind);
  }
  case SparseKind::generic_linear:
    return SparsePrior(Matrix(sample_mixing(n, MixingKind::general_linear, seed).entries()), m, kind);
  }
  return standard(n, m);
}

std::vector<Index> random_support(Index n, Index m, Rng& rng) {
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  // partial Fisher-Yates; std::shuffle's draw pattern is implementation-defined
  for (Index i = 0; i < m; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
  }
  all.resize(static_cast<std::size_t>(m));
  std::sort(all.begin(), all.end());
  return all;
}

Signal sample_sparse(const SparsePrior& prior, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  const auto support = random_support(prior.dim(), prior.sparsity, rng);
  std::normal_distribution<double> normal;
  Vector coeffs = Vector::Zero(prior.dim());
  for (Index i : support) coeffs[i] = normal(rng);
  return prior.basis * coeffs;
}

Index prior_dim(const PriorModel& prior) {
  return std::visit(
      [](const auto& p) -> Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, GeneratorNetwork>)
          return p.output_dim();
        else
          return p.dim();
      },
      prior);
}

Index prior_latent_dim(const PriorModel& prior) {
  return std::visit(
      [](const auto& p) -> Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, GeneratorNetwork>)
          return p.latent_dim();
        else
          return p.sparsity;
      },
      prior);
}

Matrix haar_rotation(Index n, Rng& rng) {
  const Matrix g = gaussian_matrix(rng, n, n);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // sign-correct so diag(R) > 0; this makes Q Haar on O(N)
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  if (q.determinant() < 0.0) q.row(0) = -q.row(0);
  return q;
}

MixingMatrix sample_mixing(Index n, MixingKind kind, std::uint64_t seed) {
  if (n < 1) throw InvalidDimension("sample_mixing needs N >= 1");
  Rng rng = make_rng(seed);
  if (kind == MixingKind::special_orthogonal) {
    for (int attempt = 0; attempt < 16; ++attempt) {
      RowMatrix q = haar_rotation(n, rng);
      try {
        return MixingMatrix(std::move(q), kind);
      } catch (const InvalidInput&) {
      }
    }
  } else {
    for (int attempt = 0; attempt < 16; ++attempt) {
      const Matrix g = gaussian_matrix(rng, n, n);
      Eigen::JacobiSVD<Matrix> svd(g);
      const auto& s = svd.singularValues();
      if (s[n - 1] >= 1e-12 * s[0]) return MixingMatrix(RowMatrix(g), kind);
    }
  }
  throw NumericalFailure("sample_mixing: 16 attempts without an admissible matrix");
}

} // namespace sapr
