#pragma once

#include <stdexcept>
#include <string>

namespace localprop {

// Shape disagreement between operands (matrices, layer specs, update sets).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A NaN/Inf (or an out-of-domain value) surfaced while computing layer `layer`.
// layer is 0-based; -1 when no single layer is responsible.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, int layer)
      : std::runtime_error(what + (layer >= 0 ? " (layer " + std::to_string(layer) + ")" : "")),
        layer_(layer) {}

  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// IDX ingestion failures. Each failure mode is its own type.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BadMagicError : public DataError {
 public:
  using DataError::DataError;
};

class TruncatedFileError : public DataError {
 public:
  using DataError::DataError;
};

class CountMismatchError : public DataError {
 public:
  using DataError::DataError;
};

// Training aborted because the output loss became non-finite or exploded.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int epoch, int batch, int layer)
      : std::runtime_error(what), epoch_(epoch), batch_(batch), layer_(layer) {}

  int epoch() const noexcept { return epoch_; }
  int batch() const noexcept { return batch_; }
  int layer() const noexcept { return layer_; }

 private:
  int epoch_;
  int batch_;
  int layer_;
};

}  // namespace localprop
