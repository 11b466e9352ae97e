#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "localprop/linalg.hpp"

namespace localprop {

enum class Activation { Tanh, Softmax, Identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

// Softmax outputs are floored here before any log or division.
inline constexpr double kProbabilityFloor = 1e-8;

Matrix activate(Activation a, const Matrix& pre);

// Elementwise derivative. Softmax has no pointwise derivative and throws.
Matrix activation_derivative(Activation a, const Matrix& pre);

// Same derivative expressed through the post-activation (1 - z^2 for tanh).
Matrix activation_derivative_from_output(Activation a, const Matrix& post);

struct LayerSpec {
  int input_dim = 0;
  int output_dim = 0;
  Activation activation = Activation::Tanh;
};

// Checks dimensions, adjacency, and that Softmax only appears on top.
void validate_specs(std::span<const LayerSpec> specs);

// input -> hidden_layers x (width, tanh) -> output (softmax).
std::vector<LayerSpec> mlp_specs(int input_dim, int width, int hidden_layers, int output_dim);

// Shape of the auxiliary matrices stored next to the forward weights.
//   Transposed: feedback[i] is [dim(z_{i-1}) x dim(z_i)] for i >= 1 (LRA-E error
//               weights, DTP decoders, RFA fixed feedback). feedback[0] is empty.
//   Direct:     feedback[i] is [dim(z_i) x dim(output)] for i < L-1 (DFA).
//               feedback[L-1] is empty.
enum class FeedbackLayout { None, Transposed, Direct };

struct Layer {
  Matrix weights;  // [output_dim x input_dim]
  Vector bias;     // [output_dim]
  Activation activation = Activation::Tanh;

  int input_dim() const { return static_cast<int>(weights.cols()); }
  int output_dim() const { return static_cast<int>(weights.rows()); }
};

struct NetworkParams {
  std::vector<Layer> layers;
  std::vector<Matrix> feedback;  // size layers.size(); entries may be 0x0
  FeedbackLayout layout = FeedbackLayout::None;

  int depth() const { return static_cast<int>(layers.size()); }
  int input_dim() const { return layers.front().input_dim(); }
  int output_dim() const { return layers.back().output_dim(); }
  bool has_feedback(int layer) const;

  std::vector<LayerSpec> specs() const;

  // Throws DimensionError on inconsistent shapes, NumericError on non-finite entries.
  void validate() const;

  friend bool operator==(const NetworkParams& a, const NetworkParams& b);
};

// Expected shape of feedback[layer] under `layout`, or {0, 0} when absent.
std::pair<int, int> feedback_shape(std::span<const LayerSpec> specs, FeedbackLayout layout, int layer);

// Activities of one mini-batch. Layer i (0-based) holds pre[i] = h_{i+1}, post[i] = z_{i+1}.
struct ForwardTrace {
  Matrix input;
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
  std::vector<Activation> activations;

  int depth() const { return static_cast<int>(post.size()); }
  // Post-activation feeding layer i (the input batch for i == 0).
  const Matrix& below(int layer) const { return layer == 0 ? input : post[layer - 1]; }
  const Matrix& output() const { return post.back(); }
};

// h_i = z_{i-1} W_i^T + c_i, z_i = phi_i(h_i), row-wise over the batch.
ForwardTrace forward(const NetworkParams& params, const Matrix& x);

// Post-activation of `layer` only (runs the layers below it).
Matrix forward_to(const NetworkParams& params, const Matrix& x, int layer);

}  // namespace localprop
