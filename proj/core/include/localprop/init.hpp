#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

#include "localprop/network.hpp"

namespace localprop {

struct InitScheme {
  enum class Kind { Gaussian, FanInFanOut, Orthogonal };

  Kind kind = Kind::Gaussian;
  double variance = 0.05;  // Gaussian only

  static InitScheme gaussian(double variance = 0.05) { return {Kind::Gaussian, variance}; }
  static InitScheme fan_in_fan_out() { return {Kind::FanInFanOut, 0.05}; }
  static InitScheme orthogonal() { return {Kind::Orthogonal, 0.05}; }

  void validate() const;
  std::string name() const;
  static InitScheme parse(const std::string& text);

  friend bool operator==(const InitScheme&, const InitScheme&) = default;
};

// Uniform bound sqrt(6 / (fan_in + fan_out)) used by the fan-in-fan-out scheme.
double fan_in_fan_out_bound(int rows, int cols);

// One [rows x cols] draw. Orthogonal draws come from the QR factorisation of a
// standard Gaussian matrix with the signs of R's diagonal folded into Q.
Matrix draw_matrix(int rows, int cols, const InitScheme& scheme, std::mt19937_64& rng);

// Every matrix gets its own engine derived from (seed, role, layer), so the
// forward weights for a given seed do not depend on the feedback layout.
// Biases start at zero.
NetworkParams init_params(std::span<const LayerSpec> specs, const InitScheme& scheme, std::uint64_t seed,
                          FeedbackLayout layout = FeedbackLayout::Transposed);

}  // namespace localprop
