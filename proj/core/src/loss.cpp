#include <cmath>

#include "localprop/errors.hpp"
#include "localprop/loss.hpp"
#include "localprop/network.hpp"

namespace localprop {
namespace {

void check_shapes(const Matrix& target, const Matrix& z) {
  if (target.rows() != z.rows() || target.cols() != z.cols()) {
    throw DimensionError("loss operands differ in shape: target " + std::to_string(target.rows()) + "x" +
                         std::to_string(target.cols()) + ", z " + std::to_string(z.rows()) + "x" +
                         std::to_string(z.cols()));
  }
}

Matrix clipped_probabilities(const Matrix& z) {
  Matrix p = z.array().max(kProbabilityFloor).min(1.0).matrix();
  if (!p.allFinite() || (p.array() <= 0.0).any()) {
    throw NumericError("categorical loss needs strictly positive probabilities", -1);
  }
  return p;
}

}  // namespace

void LossFamily::validate() const {
  if (kind == Kind::Gaussian && !(variance > 0.0)) {
    throw ConfigError("gaussian loss variance must be positive");
  }
}

std::string LossFamily::name() const {
  switch (kind) {
    case Kind::Categorical:
      return half_factor ? "categorical_half" : "categorical";
    case Kind::Gaussian:
      return "gaussian";
    case Kind::Cauchy:
      return "cauchy";
  }
  return "unknown";
}

LossFamily LossFamily::parse(const std::string& text) {
  if (text == "categorical") return categorical(false);
  if (text == "categorical_half") return categorical(true);
  if (text == "gaussian") return gaussian();
  if (text == "cauchy") return cauchy();
  throw ConfigError("unknown loss family '" + text + "'");
}

Vector sample_losses(const LossFamily& family, const Matrix& target, const Matrix& z) {
  check_shapes(target, z);
  switch (family.kind) {
    case LossFamily::Kind::Categorical: {
      const Matrix p = clipped_probabilities(z);
      const double scale = family.half_factor ? -0.5 : -1.0;
      return scale * (target.array() * p.array().log()).rowwise().sum().matrix();
    }
    case LossFamily::Kind::Gaussian:
      return (target - z).array().square().rowwise().sum().matrix() / (2.0 * family.variance);
    case LossFamily::Kind::Cauchy:
      return (1.0 + (target - z).array().square()).log().rowwise().sum().matrix();
  }
  return Vector::Zero(z.rows());
}

double local_loss(const LossFamily& family, const Matrix& target, const Matrix& z) {
  if (z.rows() == 0) return 0.0;
  return sample_losses(family, target, z).mean();
}

Matrix error_units(const LossFamily& family, const Matrix& target, const Matrix& z) {
  check_shapes(target, z);
  switch (family.kind) {
    case LossFamily::Kind::Categorical:
      return (-target.array() / clipped_probabilities(z).array()).matrix();
    case LossFamily::Kind::Gaussian:
      return -(target - z) / family.variance;
    case LossFamily::Kind::Cauchy: {
      const auto d = (target - z).array();
      return (-2.0 * d / (1.0 + d.square())).matrix();
    }
  }
  return Matrix::Zero(z.rows(), z.cols());
}

}  // namespace localprop
