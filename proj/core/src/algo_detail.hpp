#pragma once

#include <string>

#include "localprop/algos.hpp"
#include "localprop/errors.hpp"

namespace localprop::detail {

// dW = delta^T below / B, dc = column means of delta.
inline void store_layer_gradient(UpdateSet& u, int layer, const Matrix& delta, const Matrix& below) {
  const double inv = 1.0 / static_cast<double>(delta.rows());
  u.weights[layer].noalias() = delta.transpose() * below;
  u.weights[layer] *= inv;
  u.biases[layer] = delta.colwise().sum().transpose() * inv;
}

inline void check_labels(const ForwardTrace& trace, const Matrix& y) {
  const Matrix& out = trace.output();
  if (y.rows() != out.rows() || y.cols() != out.cols()) {
    throw DimensionError("labels are " + std::to_string(y.rows()) + "x" + std::to_string(y.cols()) +
                         ", network output is " + std::to_string(out.rows()) + "x" +
                         std::to_string(out.cols()));
  }
}

inline void check_trace(const NetworkParams& params, const ForwardTrace& trace) {
  if (trace.depth() != params.depth()) throw DimensionError("trace depth does not match the network");
}

inline void require_feedback(const NetworkParams& params, FeedbackLayout layout, const char* who) {
  if (params.layout != layout) {
    throw DimensionError(std::string(who) + " needs a different feedback layout in NetworkParams");
  }
}

}  // namespace localprop::detail
