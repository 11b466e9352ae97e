#include "algo_detail.hpp"
#include "localprop/algos.hpp"

namespace localprop {

UpdateSet rfa_updates(const NetworkParams& params, const ForwardTrace& trace, const Matrix& y) {
  detail::check_trace(params, trace);
  detail::check_labels(trace, y);
  detail::require_feedback(params, FeedbackLayout::Transposed, "RFA");
  const int depth = params.depth();
  UpdateSet u = UpdateSet::zeros_like(params, false);
  Matrix delta = output_delta(trace.activations.back(), trace.output(), y);
  for (int i = depth - 1; i >= 0; --i) {
    detail::store_layer_gradient(u, i, delta, trace.below(i));
    if (i > 0) {
      Matrix back = delta * params.feedback[i].transpose();
      delta = (back.array() * activation_derivative_from_output(trace.activations[i - 1], trace.post[i - 1]).array())
                  .matrix();
    }
  }
  u.check_finite();
  return u;
}

UpdateSet rfa_updates(const NetworkParams& params, const Matrix& x, const Matrix& y) {
  return rfa_updates(params, forward(params, x), y);
}

UpdateSet dfa_updates(const NetworkParams& params, const ForwardTrace& trace, const Matrix& y) {
  detail::check_trace(params, trace);
  detail::check_labels(trace, y);
  detail::require_feedback(params, FeedbackLayout::Direct, "DFA");
  const int depth = params.depth();
  UpdateSet u = UpdateSet::zeros_like(params, false);
  const Matrix e_out = output_delta(trace.activations.back(), trace.output(), y);
  detail::store_layer_gradient(u, depth - 1, e_out, trace.below(depth - 1));
  for (int i = depth - 2; i >= 0; --i) {
    const Matrix projected = e_out * params.feedback[i].transpose();
    const Matrix delta =
        (projected.array() * activation_derivative_from_output(trace.activations[i], trace.post[i]).array())
            .matrix();
    detail::store_layer_gradient(u, i, delta, trace.below(i));
  }
  u.check_finite();
  return u;
}

UpdateSet dfa_updates(const NetworkParams& params, const Matrix& x, const Matrix& y) {
  return dfa_updates(params, forward(params, x), y);
}

}  // namespace localprop
