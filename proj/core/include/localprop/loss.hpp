#pragma once

#include <string>

#include "localprop/linalg.hpp"

namespace localprop {

// Local loss families. All functions take a batch (one sample per row) with
// `target` and `z` of identical shape.
//
//   Categorical  L = -sum y log z           e = -y / z
//   Gaussian     L = sum (y - z)^2 / 2s^2   e = -(y - z) / s^2
//   Cauchy       L = sum log(1 + (y - z)^2) e = -2 (y - z) / (1 + (y - z)^2)
//
// The categorical error unit is the gradient of -sum y log z. `half_factor`
// reports the loss as -(1/2) sum y log z instead; it never alters e.
struct LossFamily {
  enum class Kind { Categorical, Gaussian, Cauchy };

  Kind kind = Kind::Gaussian;
  double variance = 0.5;
  bool half_factor = false;

  static LossFamily categorical(bool half_factor = false) { return {Kind::Categorical, 0.5, half_factor}; }
  static LossFamily gaussian(double variance = 0.5) { return {Kind::Gaussian, variance, false}; }
  static LossFamily cauchy() { return {Kind::Cauchy, 0.5, false}; }

  void validate() const;
  std::string name() const;
  static LossFamily parse(const std::string& text);

  friend bool operator==(const LossFamily&, const LossFamily&) = default;
};

// Per-sample loss values, one entry per row.
Vector sample_losses(const LossFamily& family, const Matrix& target, const Matrix& z);

// Mean of sample_losses over the batch.
double local_loss(const LossFamily& family, const Matrix& target, const Matrix& z);

// dL/dz for each sample (not divided by the batch size).
Matrix error_units(const LossFamily& family, const Matrix& target, const Matrix& z);

}  // namespace localprop
