#include "algo_detail.hpp"
#include "localprop/algos.hpp"

namespace localprop {

LraSignals lra_compute_targets(const NetworkParams& params, const ForwardTrace& trace, const Matrix& y,
                               const AlgoConfig& cfg, OpCounter* counter) {
  detail::check_trace(params, trace);
  detail::check_labels(trace, y);
  detail::require_feedback(params, FeedbackLayout::Transposed, "LRA-E");
  const int depth = params.depth();

  LraSignals s;
  s.targets.layers.resize(depth);
  s.errors.layers.resize(depth);
  s.targets.layers[depth - 1] = y;
  s.errors.layers[depth - 1] = cfg.lra_output_signal == LraOutputSignal::SoftmaxDelta
                                   ? output_delta(params.layers.back().activation, trace.output(), y)
                                   : error_units(cfg.output_loss, y, trace.output());

  for (int i = depth - 1; i >= 1; --i) {
    const Matrix& e = s.errors.layers[i];
    const Matrix& error_weights = params.feedback[i];
    // displacement of the pre-activation below: e_i E_i^T, one row per sample
    Matrix displacement = e * error_weights.transpose();
    if (counter) counter->tick();
    Matrix target = activate(params.layers[i - 1].activation, trace.pre[i - 1] - cfg.beta * displacement);
    if (!target.allFinite()) throw NumericError("non-finite LRA-E target", i - 1);
    s.errors.layers[i - 1] = error_units(cfg.hidden_loss, target, trace.post[i - 1]);
    s.targets.layers[i - 1] = std::move(target);
  }
  return s;
}

UpdateSet lra_calc_updates(const ForwardTrace& trace, const LraSignals& signals, const AlgoConfig& cfg,
                           OpCounter* counter) {
  const int depth = trace.depth();
  if (static_cast<int>(signals.errors.layers.size()) != depth ||
      static_cast<int>(signals.targets.layers.size()) != depth) {
    throw DimensionError("LRA-E signals do not match the trace depth");
  }
  UpdateSet u;
  u.trains_feedback = true;
  u.weights.resize(depth);
  u.biases.resize(depth);
  u.feedback.resize(depth);

  for (int i = 0; i < depth; ++i) {
    const bool top = i == depth - 1;
    Matrix delta;
    if (top) {
      delta = output_delta(trace.activations[i], trace.output(), signals.targets.layers[i]);
    } else if (cfg.lra_variant == LraVariant::V1) {
      delta = (signals.errors.layers[i].array() *
               activation_derivative_from_output(trace.activations[i], trace.post[i]).array())
                  .matrix();
    } else {
      delta = signals.errors.layers[i];
    }
    detail::store_layer_gradient(u, i, delta, trace.below(i));
    if (i >= 1) {
      const double sign = cfg.lra_feedback_rule == LraFeedbackRule::Literal ? -1.0 : 1.0;
      u.feedback[i] = sign * cfg.gamma * u.weights[i].transpose();
      if (counter) counter->tick();
    }
  }
  u.check_finite();
  return u;
}

}  // namespace localprop
