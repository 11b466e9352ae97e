#include <string>

#include "localprop/errors.hpp"
#include "localprop/network.hpp"

namespace localprop {
namespace {

std::string shape_str(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

void validate_specs(std::span<const LayerSpec> specs) {
  if (specs.empty()) throw DimensionError("network needs at least one layer");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    if (s.input_dim < 1 || s.output_dim < 1) {
      throw DimensionError("layer " + std::to_string(i) + " has a non-positive dimension");
    }
    if (i > 0 && specs[i - 1].output_dim != s.input_dim) {
      throw DimensionError("layer " + std::to_string(i) + " input_dim " + std::to_string(s.input_dim) +
                           " does not match previous output_dim " +
                           std::to_string(specs[i - 1].output_dim));
    }
    if (s.activation == Activation::Softmax && i + 1 != specs.size()) {
      throw DimensionError("softmax is only permitted at the topmost layer");
    }
  }
}

std::vector<LayerSpec> mlp_specs(int input_dim, int width, int hidden_layers, int output_dim) {
  std::vector<LayerSpec> specs;
  int below = input_dim;
  for (int i = 0; i < hidden_layers; ++i) {
    specs.push_back({below, width, Activation::Tanh});
    below = width;
  }
  specs.push_back({below, output_dim, Activation::Softmax});
  validate_specs(specs);
  return specs;
}

std::pair<int, int> feedback_shape(std::span<const LayerSpec> specs, FeedbackLayout layout, int layer) {
  const int depth = static_cast<int>(specs.size());
  switch (layout) {
    case FeedbackLayout::None:
      return {0, 0};
    case FeedbackLayout::Transposed:
      if (layer == 0) return {0, 0};
      return {specs[layer].input_dim, specs[layer].output_dim};
    case FeedbackLayout::Direct:
      if (layer == depth - 1) return {0, 0};
      return {specs[layer].output_dim, specs.back().output_dim};
  }
  return {0, 0};
}

bool NetworkParams::has_feedback(int layer) const {
  return layer >= 0 && layer < static_cast<int>(feedback.size()) && feedback[layer].size() > 0;
}

std::vector<LayerSpec> NetworkParams::specs() const {
  std::vector<LayerSpec> out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back({l.input_dim(), l.output_dim(), l.activation});
  return out;
}

void NetworkParams::validate() const {
  const auto s = specs();
  validate_specs(s);
  if (feedback.size() != layers.size()) {
    throw DimensionError("feedback list has " + std::to_string(feedback.size()) + " entries for " +
                         std::to_string(layers.size()) + " layers");
  }
  for (int i = 0; i < depth(); ++i) {
    const auto& l = layers[i];
    if (l.bias.size() != l.weights.rows()) {
      throw DimensionError("layer " + std::to_string(i) + " bias has " + std::to_string(l.bias.size()) +
                           " entries, expected " + std::to_string(l.weights.rows()));
    }
    const auto [r, c] = feedback_shape(s, layout, i);
    if (feedback[i].rows() != r || feedback[i].cols() != c) {
      throw DimensionError("layer " + std::to_string(i) + " feedback is " +
                           shape_str(feedback[i].rows(), feedback[i].cols()) + ", expected " +
                           shape_str(r, c));
    }
    if (!l.weights.allFinite() || !l.bias.allFinite() || !feedback[i].allFinite()) {
      throw NumericError("non-finite parameter", i);
    }
  }
}

bool operator==(const NetworkParams& a, const NetworkParams& b) {
  if (a.layout != b.layout || a.layers.size() != b.layers.size() || a.feedback.size() != b.feedback.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const auto& la = a.layers[i];
    const auto& lb = b.layers[i];
    if (la.activation != lb.activation || la.weights.rows() != lb.weights.rows() ||
        la.weights.cols() != lb.weights.cols() || la.weights != lb.weights || la.bias != lb.bias) {
      return false;
    }
    if (a.feedback[i].rows() != b.feedback[i].rows() || a.feedback[i].cols() != b.feedback[i].cols() ||
        a.feedback[i] != b.feedback[i]) {
      return false;
    }
  }
  return true;
}

ForwardTrace forward(const NetworkParams& params, const Matrix& x) {
  if (params.layers.empty()) throw DimensionError("forward on an empty network");
  if (x.cols() != params.input_dim()) {
    throw DimensionError("input has " + std::to_string(x.cols()) + " columns, network expects " +
                         std::to_string(params.input_dim()));
  }
  ForwardTrace trace;
  trace.input = x;
  trace.pre.reserve(params.layers.size());
  trace.post.reserve(params.layers.size());
  for (int i = 0; i < params.depth(); ++i) {
    const auto& layer = params.layers[i];
    Matrix h = trace.below(i) * layer.weights.transpose();
    h.rowwise() += layer.bias.transpose();
    Matrix z = activate(layer.activation, h);
    if (!h.allFinite() || !z.allFinite()) throw NumericError("non-finite activity in forward pass", i);
    trace.pre.push_back(std::move(h));
    trace.post.push_back(std::move(z));
    trace.activations.push_back(layer.activation);
  }
  return trace;
}

Matrix forward_to(const NetworkParams& params, const Matrix& x, int layer) {
  if (layer < 0 || layer >= params.depth()) {
    throw DimensionError("layer index " + std::to_string(layer) + " out of range");
  }
  if (x.cols() != params.input_dim()) throw DimensionError("input width does not match the network");
  Matrix z = x;
  for (int i = 0; i <= layer; ++i) {
    const auto& l = params.layers[i];
    Matrix h = z * l.weights.transpose();
    h.rowwise() += l.bias.transpose();
    z = activate(l.activation, h);
    if (!z.allFinite()) throw NumericError("non-finite activity in forward pass", i);
  }
  return z;
}

}  // namespace localprop
