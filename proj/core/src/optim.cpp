#include <cmath>

#include "localprop/errors.hpp"
#include "localprop/optim.hpp"

namespace localprop {
namespace {

template <typename Param>
void check_same_shape(const Param& p, const Param& g, int layer) {
  if (p.rows() != g.rows() || p.cols() != g.cols()) {
    throw DimensionError("update shape does not match parameter shape at layer " + std::to_string(layer));
  }
}

// One rule applied to one tensor; the accumulators may be empty for SGD.
template <typename Param>
void step_tensor(const OptimSettings& s, std::uint64_t t, Param& p, const Param& g, Param& first, Param& second) {
  switch (s.rule) {
    case OptimRule::Sgd:
      p.noalias() -= s.step * g;
      return;
    case OptimRule::RmsProp:
      second = s.rms_decay * second + (1.0 - s.rms_decay) * g.cwiseAbs2();
      p.array() -= s.step * g.array() / (second.array().sqrt() + s.rms_epsilon);
      return;
    case OptimRule::Adam: {
      first = s.adam_beta1 * first + (1.0 - s.adam_beta1) * g;
      second = s.adam_beta2 * second + (1.0 - s.adam_beta2) * g.cwiseAbs2();
      const double c1 = 1.0 - std::pow(s.adam_beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(s.adam_beta2, static_cast<double>(t));
      p.array() -= s.step * (first.array() / c1) / ((second.array() / c2).sqrt() + s.adam_epsilon);
      return;
    }
  }
}

}  // namespace

std::string to_string(OptimRule rule) {
  switch (rule) {
    case OptimRule::Sgd:
      return "sgd";
    case OptimRule::RmsProp:
      return "rmsprop";
    case OptimRule::Adam:
      return "adam";
  }
  return "unknown";
}

OptimRule parse_optim_rule(const std::string& name) {
  if (name == "sgd") return OptimRule::Sgd;
  if (name == "rmsprop") return OptimRule::RmsProp;
  if (name == "adam") return OptimRule::Adam;
  throw ConfigError("unknown optimizer '" + name + "'");
}

void OptimSettings::validate() const {
  if (!(step > 0.0)) throw ConfigError("optimizer step size must be positive");
  if (!(rms_decay > 0.0 && rms_decay < 1.0)) throw ConfigError("rms_decay must lie in (0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(rms_epsilon > 0.0) || !(adam_epsilon > 0.0)) throw ConfigError("optimizer epsilons must be positive");
}

OptimState make_optimizer(const OptimSettings& settings, const NetworkParams& params) {
  settings.validate();
  OptimState state;
  state.settings = settings;
  const bool needs_second = settings.rule != OptimRule::Sgd;
  const bool needs_first = settings.rule == OptimRule::Adam;
  for (int i = 0; i < params.depth(); ++i) {
    const auto& l = params.layers[i];
    const auto& e = params.feedback[i];
    auto zeros = [](Eigen::Index r, Eigen::Index c, bool on) { return on ? Matrix(Matrix::Zero(r, c)) : Matrix(); };
    auto zeros_v = [](Eigen::Index n, bool on) { return on ? Vector(Vector::Zero(n)) : Vector(); };
    state.first_w.push_back(zeros(l.weights.rows(), l.weights.cols(), needs_first));
    state.second_w.push_back(zeros(l.weights.rows(), l.weights.cols(), needs_second));
    state.first_c.push_back(zeros_v(l.bias.size(), needs_first));
    state.second_c.push_back(zeros_v(l.bias.size(), needs_second));
    state.first_e.push_back(zeros(e.rows(), e.cols(), needs_first));
    state.second_e.push_back(zeros(e.rows(), e.cols(), needs_second));
  }
  return state;
}

void apply_update(OptimState& state, NetworkParams& params, const UpdateSet& updates) {
  if (updates.depth() != params.depth() || static_cast<int>(state.first_w.size()) != params.depth()) {
    throw DimensionError("update set, optimizer state and network disagree on depth");
  }
  ++state.steps;
  const auto& s = state.settings;
  for (int i = 0; i < params.depth(); ++i) {
    auto& layer = params.layers[i];
    check_same_shape(layer.weights, updates.weights[i], i);
    check_same_shape(layer.bias, updates.biases[i], i);
    step_tensor(s, state.steps, layer.weights, updates.weights[i], state.first_w[i], state.second_w[i]);
    step_tensor(s, state.steps, layer.bias, updates.biases[i], state.first_c[i], state.second_c[i]);
    if (updates.trains_feedback && params.has_feedback(i)) {
      check_same_shape(params.feedback[i], updates.feedback[i], i);
      step_tensor(s, state.steps, params.feedback[i], updates.feedback[i], state.first_e[i], state.second_e[i]);
    }
    if (!layer.weights.allFinite() || !layer.bias.allFinite() || !params.feedback[i].allFinite()) {
      throw NumericError("non-finite parameter after optimizer step", i);
    }
  }
}

}  // namespace localprop
