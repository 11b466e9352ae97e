#include <string>

#include "algo_detail.hpp"
#include "localprop/algos.hpp"

namespace localprop {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Backprop:
      return "backprop";
    case Algorithm::LraE:
      return "lra_e";
    case Algorithm::Dtp:
      return "dtp";
    case Algorithm::DtpSigma:
      return "dtp_sigma";
    case Algorithm::Rfa:
      return "rfa";
    case Algorithm::Dfa:
      return "dfa";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "backprop" || name == "bp") return Algorithm::Backprop;
  if (name == "lra_e" || name == "lra-e" || name == "lra") return Algorithm::LraE;
  if (name == "dtp") return Algorithm::Dtp;
  if (name == "dtp_sigma" || name == "dtp-sigma") return Algorithm::DtpSigma;
  if (name == "rfa") return Algorithm::Rfa;
  if (name == "dfa") return Algorithm::Dfa;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

FeedbackLayout feedback_layout(Algorithm a) {
  switch (a) {
    case Algorithm::Backprop:
      return FeedbackLayout::None;
    case Algorithm::Dfa:
      return FeedbackLayout::Direct;
    default:
      return FeedbackLayout::Transposed;
  }
}

bool trains_feedback(Algorithm a) {
  return a == Algorithm::LraE || a == Algorithm::Dtp || a == Algorithm::DtpSigma;
}

void AlgoConfig::validate() const {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(sigma_floor >= 0.0)) throw ConfigError("sigma_floor must be non-negative");
  if (!(dtp_sigma >= 0.0)) throw ConfigError("dtp_sigma must be non-negative");
  if (!(dtp_top_step > 0.0 && dtp_top_step <= 1.0)) throw ConfigError("dtp_top_step must lie in (0, 1]");
  if (hidden_loss.kind == LossFamily::Kind::Categorical) {
    throw ConfigError("hidden loss must be gaussian or cauchy");
  }
  hidden_loss.validate();
}

UpdateSet UpdateSet::zeros_like(const NetworkParams& params, bool trains_feedback) {
  UpdateSet u;
  u.trains_feedback = trains_feedback;
  for (int i = 0; i < params.depth(); ++i) {
    const auto& l = params.layers[i];
    u.weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    u.biases.push_back(Vector::Zero(l.bias.size()));
    if (trains_feedback && params.has_feedback(i)) {
      u.feedback.push_back(Matrix::Zero(params.feedback[i].rows(), params.feedback[i].cols()));
    } else {
      u.feedback.emplace_back();
    }
  }
  return u;
}

void UpdateSet::check_finite() const {
  for (int i = 0; i < depth(); ++i) {
    if (!weights[i].allFinite() || !biases[i].allFinite() || !feedback[i].allFinite()) {
      throw NumericError("non-finite update", i);
    }
  }
}

bool UpdateSet::all_zero() const {
  for (int i = 0; i < depth(); ++i) {
    if (!weights[i].isZero(0.0) || !biases[i].isZero(0.0) || !feedback[i].isZero(0.0)) return false;
  }
  return true;
}

bool operator==(const UpdateSet& a, const UpdateSet& b) {
  if (a.trains_feedback != b.trains_feedback || a.depth() != b.depth()) return false;
  for (int i = 0; i < a.depth(); ++i) {
    if (a.weights[i].rows() != b.weights[i].rows() || a.weights[i].cols() != b.weights[i].cols() ||
        a.feedback[i].rows() != b.feedback[i].rows() || a.feedback[i].cols() != b.feedback[i].cols()) {
      return false;
    }
    if (a.weights[i] != b.weights[i] || a.biases[i] != b.biases[i] || a.feedback[i] != b.feedback[i]) {
      return false;
    }
  }
  return true;
}

Matrix output_delta(Activation top, const Matrix& z, const Matrix& y) {
  if (top == Activation::Softmax) {
    return (z.array().colwise() * y.rowwise().sum().array()).matrix() - y;
  }
  return (error_units(LossFamily::categorical(), y, z).array() *
          activation_derivative_from_output(top, z).array())
      .matrix();
}

UpdateSet backprop_updates(const NetworkParams& params, const ForwardTrace& trace, const Matrix& y) {
  detail::check_trace(params, trace);
  detail::check_labels(trace, y);
  const int depth = params.depth();
  UpdateSet u = UpdateSet::zeros_like(params, false);
  Matrix delta = output_delta(params.layers.back().activation, trace.output(), y);
  for (int i = depth - 1; i >= 0; --i) {
    detail::store_layer_gradient(u, i, delta, trace.below(i));
    if (i > 0) {
      Matrix back = delta * params.layers[i].weights;
      delta = (back.array() *
               activation_derivative_from_output(params.layers[i - 1].activation, trace.post[i - 1]).array())
                  .matrix();
    }
  }
  u.check_finite();
  return u;
}

UpdateSet backprop_updates(const NetworkParams& params, const Matrix& x, const Matrix& y) {
  return backprop_updates(params, forward(params, x), y);
}

namespace {

std::vector<double> output_only_losses(const NetworkParams& params, const ForwardTrace& trace, const Matrix& y,
                                       const AlgoConfig& cfg) {
  std::vector<double> losses(params.depth(), 0.0);
  losses.back() = local_loss(cfg.output_loss, y, trace.output());
  return losses;
}

std::vector<double> target_losses(const ForwardTrace& trace, const TargetSet& targets, const AlgoConfig& cfg) {
  const int depth = trace.depth();
  std::vector<double> losses(depth, 0.0);
  for (int i = 0; i + 1 < depth; ++i) losses[i] = local_loss(cfg.hidden_loss, targets.layers[i], trace.post[i]);
  return losses;
}

std::uint64_t layer_seed(std::uint64_t seed, int layer) {
  // splitmix64 finaliser over (seed, layer)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(layer + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

CreditAssignment assign_credit(Algorithm algorithm, const NetworkParams& params, const Matrix& x,
                               const Matrix& y, const AlgoConfig& cfg, std::uint64_t noise_seed,
                               OpCounter* counter) {
  CreditAssignment out;
  out.trace = forward(params, x);
  detail::check_labels(out.trace, y);
  switch (algorithm) {
    case Algorithm::Backprop:
      out.updates = backprop_updates(params, out.trace, y);
      out.layer_losses = output_only_losses(params, out.trace, y, cfg);
      break;
    case Algorithm::Rfa:
      out.updates = rfa_updates(params, out.trace, y);
      out.layer_losses = output_only_losses(params, out.trace, y, cfg);
      break;
    case Algorithm::Dfa:
      out.updates = dfa_updates(params, out.trace, y);
      out.layer_losses = output_only_losses(params, out.trace, y, cfg);
      break;
    case Algorithm::LraE: {
      LraSignals signals = lra_compute_targets(params, out.trace, y, cfg, counter);
      out.updates = lra_calc_updates(out.trace, signals, cfg, counter);
      out.layer_losses = target_losses(out.trace, signals.targets, cfg);
      out.layer_losses.back() = local_loss(cfg.output_loss, y, out.trace.output());
      out.targets = std::move(signals.targets);
      break;
    }
    case Algorithm::Dtp:
    case Algorithm::DtpSigma: {
      TargetSet targets = dtp_compute_targets(params, out.trace, y, cfg, counter);
      out.layer_losses = target_losses(out.trace, targets, cfg);
      out.layer_losses.back() = local_loss(cfg.output_loss, y, out.trace.output());
      const int depth = params.depth();
      if (algorithm == Algorithm::DtpSigma) {
        out.sigmas = adaptive_sigma(out.layer_losses, cfg.alpha, cfg.sigma_floor);
      } else {
        out.sigmas.assign(depth, cfg.dtp_sigma);
        out.sigmas[0] = 0.0;
      }
      std::vector<NoisePass> noise(depth);
      for (int i = 1; i < depth; ++i) {
        noise[i] = dtp_noise_pass(params, out.trace, i, out.sigmas[i], layer_seed(noise_seed, i), counter);
      }
      out.updates = dtp_calc_updates(params, out.trace, targets, noise, y, cfg, counter);
      out.targets = std::move(targets);
      break;
    }
  }
  return out;
}

std::vector<double> layer_losses(Algorithm algorithm, const NetworkParams& params, const Matrix& x,
                                 const Matrix& y, const AlgoConfig& cfg) {
  const ForwardTrace trace = forward(params, x);
  detail::check_labels(trace, y);
  std::vector<double> losses;
  switch (algorithm) {
    case Algorithm::LraE:
      losses = target_losses(trace, lra_compute_targets(params, trace, y, cfg).targets, cfg);
      break;
    case Algorithm::Dtp:
    case Algorithm::DtpSigma:
      losses = target_losses(trace, dtp_compute_targets(params, trace, y, cfg), cfg);
      break;
    default:
      losses.assign(params.depth(), 0.0);
      break;
  }
  losses.back() = local_loss(cfg.output_loss, y, trace.output());
  return losses;
}

}  // namespace localprop
