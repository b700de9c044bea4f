#include "sapr/prior_io.hpp"

#include <cmath>
#include <fstream>

#include "sapr/error.hpp"

namespace sapr {
namespace {

using nlohmann::json;

std::vector<double> row_major(const Matrix& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

Matrix from_row_major(const json& data, Index rows, Index cols, const std::string& where) {
  if (!data.is_array() || static_cast<Index>(data.size()) != rows * cols)
    throw FormatError(where + ": expected " + std::to_string(rows * cols) + " row-major entries");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = data.at(static_cast<std::size_t>(i * cols + j)).get<double>();
  return m;
}

template <typename T>
T required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw FormatError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(where + ": field '" + key + "' has the wrong type");
  }
}

} // namespace

json to_json(const GeneratorNetwork& net) {
  json layers = json::array();
  for (const auto& layer : net.layers()) {
    json l = {{"rows", layer.weights.rows()},
              {"cols", layer.weights.cols()},
              {"data", row_major(layer.weights)},
              {"activation", std::string(to_string(layer.activation.kind))}};
    if (layer.activation.kind == ActivationKind::leaky_relu) l["slope"] = layer.activation.slope;
    if (layer.activation.kind == ActivationKind::hardtanh) {
      l["lo"] = layer.activation.lo;
      l["hi"] = layer.activation.hi;
    }
    if (layer.bias.size() != 0) l["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
    layers.push_back(std::move(l));
  }
  return {{"latent_dim", net.latent_dim()}, {"layers", std::move(layers)}};
}

json to_json(const SparsePrior& prior) {
  return {{"basis", row_major(prior.basis)},
          {"sparsity", prior.sparsity},
          {"kind", std::string(to_string(prior.kind))}};
}

GeneratorNetwork generator_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("generator: expected a JSON object");
  if (!j.contains("layers") || !j.at("layers").is_array() || j.at("layers").empty())
    throw FormatError("generator: 'layers' must be a non-empty array");
  std::vector<Layer> layers;
  std::size_t idx = 0;
  for (const auto& lj : j.at("layers")) {
    const std::string where = "generator.layers[" + std::to_string(idx++) + "]";
    const auto rows = required<Index>(lj, "rows", where);
    const auto cols = required<Index>(lj, "cols", where);
    if (rows < 1 || cols < 1) throw FormatError(where + ": rows and cols must be positive");
    Layer layer;
    layer.weights = from_row_major(lj.at("data"), rows, cols, where);
    layer.activation.kind = parse_activation(required<std::string>(lj, "activation", where));
    layer.activation.slope = lj.value("slope", 0.01);
    layer.activation.lo = lj.value("lo", -1.0);
    layer.activation.hi = lj.value("hi", 1.0);
    if (lj.contains("bias")) {
      const auto bias = lj.at("bias").get<std::vector<double>>();
      layer.bias = Eigen::Map<const Vector>(bias.data(), static_cast<Index>(bias.size()));
    }
    layers.push_back(std::move(layer));
  }
  GeneratorNetwork net(std::move(layers));
  if (j.contains("latent_dim") && j.at("latent_dim").get<Index>() != net.latent_dim())
    throw FormatError("generator: latent_dim does not match the first layer's cols");
  return net;
}

SparsePrior sparse_prior_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("sparse prior: expected a JSON object");
  const auto& basis = j.at("basis");
  const auto count = static_cast<Index>(basis.size());
  const auto n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(count))));
  if (n * n != count || n < 1) throw FormatError("sparse prior: basis must hold N*N entries");
  return SparsePrior(from_row_major(basis, n, n, "sparse prior basis"),
                     required<Index>(j, "sparsity", "sparse prior"),
                     parse_sparse_kind(required<std::string>(j, "kind", "sparse prior")));
}

PriorModel prior_from_json(const json& j) {
  if (j.contains("layers")) return generator_from_json(j);
  if (j.contains("basis")) return sparse_prior_from_json(j);
  throw FormatError("prior: expected either 'layers' (generator) or 'basis' (sparse prior)");
}

PriorModel load_prior(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open prior file " + path.string());
  try {
    return prior_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw FormatError("prior file " + path.string() + ": " + e.what());
  }
}

} // namespace sapr
