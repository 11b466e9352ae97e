#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "localprop/linalg.hpp"
#include "localprop/loss.hpp"
#include "localprop/network.hpp"

namespace localprop {

enum class Algorithm { Backprop, LraE, Dtp, DtpSigma, Rfa, Dfa };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

// Which auxiliary matrices an algorithm needs, and whether it learns them.
FeedbackLayout feedback_layout(Algorithm a);
bool trains_feedback(Algorithm a);

enum class LraVariant { V1, V2 };

// Signal LRA-E projects through E_L at the top of the sweep.
//   ErrorUnit:    the raw categorical unit -y / z_L.
//   SoftmaxDelta: z_L - y, the categorical error pulled back through softmax.
enum class LraOutputSignal { ErrorUnit, SoftmaxDelta };

// How LRA-E error weights move relative to the forward update dW_i.
//   Literal:  dE_i = -gamma dW_i^T, descended like every other delta.
//   Tracking: dE_i = +gamma dW_i^T, so E_i follows the change applied to W_i^T.
enum class LraFeedbackRule { Literal, Tracking };

// Hidden DTP target from the layer above, with g the decoder of that layer.
//   CanonicalDifference: y_{i-1} = z_{i-1} - g(z_i) + g(y_i)
//   SumOfDecodings:      y_{i-1} = z_{i-1} - (g(z_i) + g(y_i))
enum class DtpTargetForm { CanonicalDifference, SumOfDecodings };

struct AlgoConfig {
  double beta = 0.1;   // LRA-E modulation of the projected displacement
  double gamma = 0.5;  // LRA-E error-weight decay, in (0, 1)
  double alpha = 0.01; // DTP-sigma top-layer noise std
  LossFamily hidden_loss = LossFamily::gaussian(0.5);
  LossFamily output_loss = LossFamily::categorical();
  LraVariant lra_variant = LraVariant::V1;
  LraOutputSignal lra_output_signal = LraOutputSignal::ErrorUnit;
  LraFeedbackRule lra_feedback_rule = LraFeedbackRule::Literal;
  DtpTargetForm dtp_target_form = DtpTargetForm::CanonicalDifference;
  double sigma_floor = 1e-4;
  double dtp_sigma = 0.1;     // fixed noise std of the original DTP
  double dtp_top_step = 0.1;  // y_L = z_L - step * (z_L - y)
  bool clamp_targets = true;  // keep DTP hidden targets inside the tanh range

  void validate() const;
};

// Per-layer matrices, one sample per row, indexed like NetworkParams::layers.
struct TargetSet {
  std::vector<Matrix> layers;
};

struct ErrorUnits {
  std::vector<Matrix> layers;
};

// Quantities to be descended: theta <- theta - step * delta. `feedback[i]` is
// empty when the algorithm leaves feedback matrices untouched.
struct UpdateSet {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  std::vector<Matrix> feedback;
  bool trains_feedback = false;

  static UpdateSet zeros_like(const NetworkParams& params, bool trains_feedback);
  int depth() const { return static_cast<int>(weights.size()); }
  // Throws NumericError naming the first layer with a non-finite entry.
  void check_finite() const;
  bool all_zero() const;

  friend bool operator==(const UpdateSet& a, const UpdateSet& b);
};

// Tally of matrix products on the target-generation path, per sample. A
// product counts when it reads a feedback/decoder matrix, forms that matrix's
// update, or re-applies a forward matrix outside the shared forward pass.
struct OpCounter {
  std::size_t target_products = 0;

  void tick(std::size_t n = 1) { target_products += n; }
};

// Exact gradient of the batch-mean output loss. Requires a softmax output
// trained against the categorical loss.
UpdateSet backprop_updates(const NetworkParams& params, const ForwardTrace& trace, const Matrix& y);
UpdateSet backprop_updates(const NetworkParams& params, const Matrix& x, const Matrix& y);

struct LraSignals {
  TargetSet targets;
  ErrorUnits errors;
};

// Top-down sweep: y_{i-1} = phi(h_{i-1} - beta * e_i E_i^T), e_{i-1} from the hidden loss.
LraSignals lra_compute_targets(const NetworkParams& params, const ForwardTrace& trace, const Matrix& y,
                               const AlgoConfig& cfg, OpCounter* counter = nullptr);

// V1: dW_i = (e_i * phi'(h_i))^T z_{i-1} / B, V2 drops phi'. dE_i = -+gamma dW_i^T
// per cfg.lra_feedback_rule.
// The output layer always uses the softmax delta z_L - y.
UpdateSet lra_calc_updates(const ForwardTrace& trace, const LraSignals& signals, const AlgoConfig& cfg,
                           OpCounter* counter = nullptr);

TargetSet dtp_compute_targets(const NetworkParams& params, const ForwardTrace& trace, const Matrix& y,
                              const AlgoConfig& cfg, OpCounter* counter = nullptr);

// Corrupt z_{layer-1}, re-encode through W_layer and decode through E_layer.
struct NoisePass {
  int layer = 0;
  double sigma = 0.0;
  Matrix corrupted;       // y^_{layer-1} = z_{layer-1} + eps
  Matrix code;            // phi_layer(y^ W^T + c)
  Matrix reconstruction;  // z^_{layer-1} = phi_{layer-1}(code E^T)
};

NoisePass dtp_noise_pass(const NetworkParams& params, const ForwardTrace& trace, int layer, double sigma,
                         std::uint64_t seed, OpCounter* counter = nullptr);

// layer_losses[i] is the local loss at layer i. Returns sigma[i] for the noise
// pass of layer i (sigma[0] unused): sigma[L-1] = alpha,
// sigma[i] = max(floor, sigma[i+1] - layer_losses[i-1]).
std::vector<double> adaptive_sigma(std::span<const double> layer_losses, double alpha, double floor);

// Hidden dW_i descend each layer's own local loss toward targets[i]; the output
// layer descends the categorical loss; dE_i descends the reconstruction loss of
// noise[i]. `noise` is indexed by layer (entry 0 ignored).
UpdateSet dtp_calc_updates(const NetworkParams& params, const ForwardTrace& trace, const TargetSet& targets,
                           std::span<const NoisePass> noise, const Matrix& y, const AlgoConfig& cfg,
                           OpCounter* counter = nullptr);

// Backprop sweep with W_i^T replaced by the fixed feedback[i].
UpdateSet rfa_updates(const NetworkParams& params, const ForwardTrace& trace, const Matrix& y);
UpdateSet rfa_updates(const NetworkParams& params, const Matrix& x, const Matrix& y);

// Hidden delta_i = (e_out feedback[i]^T) * phi'(h_i) with e_out = z_L - y.
UpdateSet dfa_updates(const NetworkParams& params, const ForwardTrace& trace, const Matrix& y);
UpdateSet dfa_updates(const NetworkParams& params, const Matrix& x, const Matrix& y);

struct CreditAssignment {
  ForwardTrace trace;
  UpdateSet updates;
  TargetSet targets;                // empty for Backprop/RFA/DFA
  std::vector<double> layer_losses; // local loss per layer; hidden entries 0 without targets
  std::vector<double> sigmas;       // DTP variants only
};

// One mini-batch through the chosen algorithm. `noise_seed` drives DTP noise.
CreditAssignment assign_credit(Algorithm algorithm, const NetworkParams& params, const Matrix& x,
                               const Matrix& y, const AlgoConfig& cfg, std::uint64_t noise_seed,
                               OpCounter* counter = nullptr);

// Local losses of every layer under the algorithm's targets (no updates, no noise).
std::vector<double> layer_losses(Algorithm algorithm, const NetworkParams& params, const Matrix& x,
                                 const Matrix& y, const AlgoConfig& cfg);

// Output-layer delta of the softmax/categorical pair: z * rowsum(y) - y.
Matrix output_delta(Activation top, const Matrix& z, const Matrix& y);

}  // namespace localprop
