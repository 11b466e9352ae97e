#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "localprop/diagnostics.hpp"
#include "localprop/errors.hpp"
#include "localprop/init.hpp"

namespace localprop {
namespace {

struct Dots {
  double uv = 0.0, uu = 0.0, vv = 0.0;

  template <typename A, typename B>
  void add(const A& a, const B& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("update_angle: shape mismatch");
    uv += a.cwiseProduct(b).sum();
    uu += a.squaredNorm();
    vv += b.squaredNorm();
  }

  double degrees() const {
    if (uu == 0.0 || vv == 0.0) throw NumericError("update_angle: zero-norm update, angle undefined", -1);
    const double c = std::clamp(uv / std::sqrt(uu * vv), -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
  }
};

std::size_t count_wrong(const Matrix& probabilities, std::span<const std::uint8_t> labels) {
  if (static_cast<std::size_t>(probabilities.rows()) != labels.size()) {
    throw DimensionError("classification_error: row/label count mismatch");
  }
  std::size_t wrong = 0;
  for (Eigen::Index r = 0; r < probabilities.rows(); ++r) {
    Eigen::Index arg = 0;
    probabilities.row(r).maxCoeff(&arg);
    if (arg != labels[static_cast<std::size_t>(r)]) ++wrong;
  }
  return wrong;
}

}  // namespace

double update_angle(const UpdateSet& u, const UpdateSet& v) {
  if (u.depth() != v.depth()) throw DimensionError("update_angle: depth mismatch");
  Dots d;
  for (int i = 0; i < u.depth(); ++i) d.add(u.weights[i], v.weights[i]);
  for (int i = 0; i < u.depth(); ++i) d.add(u.biases[i], v.biases[i]);
  return d.degrees();
}

double layer_angle(const UpdateSet& u, const UpdateSet& v, int layer) {
  if (u.depth() != v.depth()) throw DimensionError("layer_angle: depth mismatch");
  if (layer < 0 || layer >= u.depth()) throw DimensionError("layer_angle: layer out of range");
  Dots d;
  d.add(u.weights[layer], v.weights[layer]);
  d.add(u.biases[layer], v.biases[layer]);
  return d.degrees();
}

double total_discrepancy(std::span<const double> losses, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != losses.size()) {
    throw DimensionError("total_discrepancy: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(losses.size()) + " losses");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) d += (weights.empty() ? 1.0 : weights[i]) * losses[i];
  return d;
}

std::size_t closed_form_matmul_count(Algorithm algorithm, int weight_layers) {
  const int L = weight_layers;
  switch (algorithm) {
    case Algorithm::LraE:
      if (L < 1) break;
      return static_cast<std::size_t>(2 * (L - 1));
    case Algorithm::Dtp:
    case Algorithm::DtpSigma:
      if (L < 3) break;
      return static_cast<std::size_t>(4 * (L - 3) + L);
    default:
      throw ConfigError(std::string(to_string(algorithm)) + " has no target-generation count");
  }
  throw ConfigError("matmul count needs more layers, got L = " + std::to_string(L));
}

std::size_t measured_matmul_count(Algorithm algorithm, int weight_layers, const AlgoConfig& cfg) {
  if (weight_layers < 1) throw ConfigError("measured_matmul_count: need at least one layer");
  const auto specs = mlp_specs(4, 5, weight_layers - 1, 3);
  const NetworkParams params = init_params(specs, InitScheme::fan_in_fan_out(), 7, feedback_layout(algorithm));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix x(1, 4);
  for (Eigen::Index j = 0; j < x.cols(); ++j) x(0, j) = u(rng);
  Matrix y = Matrix::Zero(1, 3);
  y(0, 1) = 1.0;
  OpCounter counter;
  assign_credit(algorithm, params, x, y, cfg, 13, &counter);
  return counter.target_products;
}

double classification_error(const Matrix& probabilities, std::span<const std::uint8_t> labels) {
  const std::size_t wrong = count_wrong(probabilities, labels);
  if (labels.empty()) return 0.0;
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(labels.size());
}

double evaluate(const NetworkParams& params, const Dataset& ds, std::size_t chunk) {
  if (ds.size() == 0) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t begin = 0; begin < ds.size(); begin += chunk) {
    const std::size_t n = std::min(chunk, ds.size() - begin);
    const Matrix z = forward_to(params, ds.images.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(n)),
                                params.depth() - 1);
    wrong += count_wrong(z, std::span(ds.labels).subspan(begin, n));
  }
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(ds.size());
}

std::vector<double> mean_layer_losses(Algorithm algorithm, const NetworkParams& params, const Dataset& ds,
                                      const AlgoConfig& cfg, std::size_t chunk) {
  std::vector<double> total(static_cast<std::size_t>(params.depth()), 0.0);
  if (ds.size() == 0) return total;
  for (std::size_t begin = 0; begin < ds.size(); begin += chunk) {
    const std::size_t n = std::min(chunk, ds.size() - begin);
    const Matrix x = ds.images.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(n));
    const Matrix y = one_hot(std::span(ds.labels).subspan(begin, n), params.output_dim());
    const auto part = layer_losses(algorithm, params, x, y, cfg);
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += part[i] * static_cast<double>(n);
  }
  for (double& t : total) t /= static_cast<double>(ds.size());
  return total;
}

void export_activations(const NetworkParams& params, const Dataset& sample, int layer,
                        const std::filesystem::path& path) {
  if (layer < 1 || layer > params.depth()) {
    throw ConfigError("export_activations: layer must be in 1.." + std::to_string(params.depth()));
  }
  const Matrix z = forward_to(params, sample.images, layer - 1);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "sample,label";
  for (Eigen::Index j = 0; j < z.cols(); ++j) out << ",d" << j;
  out << '\n';
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    out << r << ',' << int{sample.labels[static_cast<std::size_t>(r)]};
    for (Eigen::Index j = 0; j < z.cols(); ++j) out << ',' << format_double(z(r, j));
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace localprop
