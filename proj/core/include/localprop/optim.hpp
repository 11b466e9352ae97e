#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "localprop/algos.hpp"
#include "localprop/network.hpp"

namespace localprop {

enum class OptimRule { Sgd, RmsProp, Adam };

std::string to_string(OptimRule rule);
OptimRule parse_optim_rule(const std::string& name);

struct OptimSettings {
  OptimRule rule = OptimRule::Sgd;
  double step = 0.01;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-6;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

// Per-parameter accumulators shaped like NetworkParams. RMSprop uses `second`
// only; Adam uses both; SGD neither.
struct OptimState {
  OptimSettings settings;
  std::uint64_t steps = 0;
  std::vector<Matrix> first_w, second_w;
  std::vector<Vector> first_c, second_c;
  std::vector<Matrix> first_e, second_e;
};

OptimState make_optimizer(const OptimSettings& settings, const NetworkParams& params);

// Descends params along `updates` in place. Feedback matrices move only when
// updates.trains_feedback is set.
//   SGD:     theta -= step * g
//   RMSprop: v = d v + (1 - d) g^2;            theta -= step * g / (sqrt(v) + eps)
//   Adam:    m, v EMAs with bias correction;  theta -= step * m^ / (sqrt(v^) + eps)
void apply_update(OptimState& state, NetworkParams& params, const UpdateSet& updates);

}  // namespace localprop
