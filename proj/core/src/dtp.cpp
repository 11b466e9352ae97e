#include <algorithm>
#include <random>

#include "algo_detail.hpp"
#include "localprop/algos.hpp"

namespace localprop {
namespace {

// g_i(v) = phi_{i-1}(v E_i^T). Decoders carry no bias.
Matrix decode(const NetworkParams& params, int layer, const Matrix& v) {
  return activate(params.layers[layer - 1].activation, v * params.feedback[layer].transpose());
}

void clamp_to_range(Activation a, Matrix& m) {
  if (a == Activation::Tanh) m = m.array().max(-1.0).min(1.0).matrix();
}

}  // namespace

TargetSet dtp_compute_targets(const NetworkParams& params, const ForwardTrace& trace, const Matrix& y,
                              const AlgoConfig& cfg, OpCounter* counter) {
  detail::check_trace(params, trace);
  detail::check_labels(trace, y);
  detail::require_feedback(params, FeedbackLayout::Transposed, "DTP");
  const int depth = params.depth();

  TargetSet t;
  t.layers.resize(depth);
  const Matrix& z_top = trace.output();
  t.layers[depth - 1] = z_top - cfg.dtp_top_step * (z_top - y);

  for (int i = depth - 1; i >= 1; --i) {
    const Matrix decoded_activity = decode(params, i, trace.post[i]);
    const Matrix decoded_target = decode(params, i, t.layers[i]);
    if (counter) counter->tick(2);
    Matrix target = cfg.dtp_target_form == DtpTargetForm::CanonicalDifference
                        ? Matrix(trace.post[i - 1] - decoded_activity + decoded_target)
                        : Matrix(trace.post[i - 1] - (decoded_activity + decoded_target));
    if (cfg.clamp_targets) clamp_to_range(params.layers[i - 1].activation, target);
    if (!target.allFinite()) throw NumericError("non-finite DTP target", i - 1);
    t.layers[i - 1] = std::move(target);
  }
  return t;
}

NoisePass dtp_noise_pass(const NetworkParams& params, const ForwardTrace& trace, int layer, double sigma,
                         std::uint64_t seed, OpCounter* counter) {
  detail::check_trace(params, trace);
  detail::require_feedback(params, FeedbackLayout::Transposed, "DTP");
  if (layer < 1 || layer >= params.depth()) {
    throw DimensionError("noise pass needs a layer with a decoder, got " + std::to_string(layer));
  }
  NoisePass pass;
  pass.layer = layer;
  pass.sigma = sigma;
  pass.corrupted = trace.post[layer - 1];
  if (sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (Eigen::Index c = 0; c < pass.corrupted.cols(); ++c)
      for (Eigen::Index r = 0; r < pass.corrupted.rows(); ++r) pass.corrupted(r, c) += noise(rng);
  }
  const Layer& encoder = params.layers[layer];
  Matrix h = pass.corrupted * encoder.weights.transpose();
  h.rowwise() += encoder.bias.transpose();
  pass.code = activate(encoder.activation, h);
  pass.reconstruction = decode(params, layer, pass.code);
  if (counter) counter->tick(2);
  if (!pass.reconstruction.allFinite()) throw NumericError("non-finite DTP reconstruction", layer - 1);
  return pass;
}

std::vector<double> adaptive_sigma(std::span<const double> layer_losses, double alpha, double floor) {
  const int depth = static_cast<int>(layer_losses.size());
  std::vector<double> sigma(std::max(depth, 1), 0.0);
  if (depth < 2) return sigma;
  sigma[depth - 1] = alpha;
  for (int i = depth - 2; i >= 1; --i) {
    sigma[i] = std::max(floor, sigma[i + 1] - layer_losses[i - 1]);
  }
  return sigma;
}

UpdateSet dtp_calc_updates(const NetworkParams& params, const ForwardTrace& trace, const TargetSet& targets,
                           std::span<const NoisePass> noise, const Matrix& y, const AlgoConfig& cfg,
                           OpCounter* counter) {
  detail::check_trace(params, trace);
  detail::check_labels(trace, y);
  const int depth = params.depth();
  if (static_cast<int>(targets.layers.size()) != depth) throw DimensionError("DTP targets do not match depth");
  if (static_cast<int>(noise.size()) != depth) throw DimensionError("DTP noise passes do not match depth");

  UpdateSet u = UpdateSet::zeros_like(params, true);
  for (int i = 0; i < depth; ++i) {
    Matrix delta;
    if (i == depth - 1) {
      delta = output_delta(trace.activations[i], trace.output(), y);
    } else {
      delta = (error_units(cfg.hidden_loss, targets.layers[i], trace.post[i]).array() *
               activation_derivative_from_output(trace.activations[i], trace.post[i]).array())
                  .matrix();
    }
    detail::store_layer_gradient(u, i, delta, trace.below(i));
  }
  for (int i = 1; i < depth; ++i) {
    const NoisePass& pass = noise[i];
    if (pass.layer != i) throw DimensionError("noise pass for layer " + std::to_string(i) + " is missing");
    // reconstruction is the prediction, the corrupted activity its target
    const Matrix delta = (error_units(cfg.hidden_loss, pass.corrupted, pass.reconstruction).array() *
                          activation_derivative_from_output(trace.activations[i - 1], pass.reconstruction).array())
                             .matrix();
    u.feedback[i].noalias() = delta.transpose() * pass.code;
    u.feedback[i] /= static_cast<double>(delta.rows());
    if (counter) counter->tick();
  }
  u.check_finite();
  return u;
}

}  // namespace localprop
