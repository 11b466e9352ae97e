#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "localprop/algos.hpp"
#include "localprop/data.hpp"
#include "localprop/network.hpp"

namespace localprop {

// Angle in degrees between the flattened forward updates (all dW then all dc).
// Feedback deltas are ignored. Throws NumericError when either side is zero.
double update_angle(const UpdateSet& u, const UpdateSet& v);

// Same angle restricted to one layer's (dW_i, dc_i).
double layer_angle(const UpdateSet& u, const UpdateSet& v, int layer);

// Weighted sum of per-layer local losses; empty weights mean all ones.
double total_discrepancy(std::span<const double> losses, std::span<const double> weights = {});

// Target-generation products per sample predicted by closed form, for an
// L-weight-layer network: LRA-E 2(L-1), DTP and DTP-sigma 4(L-3)+L.
// Throws ConfigError for algorithms without a target-generation phase.
std::size_t closed_form_matmul_count(Algorithm algorithm, int weight_layers);

// Runs one credit-assignment step on a tiny random network with `weight_layers`
// layers and returns what the instrumented code paths ticked.
std::size_t measured_matmul_count(Algorithm algorithm, int weight_layers, const AlgoConfig& cfg = {});

// Fraction of rows whose argmax disagrees with the label, in percent.
double classification_error(const Matrix& probabilities, std::span<const std::uint8_t> labels);

// Forward pass in chunks; returns the error rate in percent.
double evaluate(const NetworkParams& params, const Dataset& ds, std::size_t chunk = 1000);

// Validation-style measurement of the per-layer local losses and the output
// loss, averaged over the dataset in chunks.
std::vector<double> mean_layer_losses(Algorithm algorithm, const NetworkParams& params, const Dataset& ds,
                                      const AlgoConfig& cfg, std::size_t chunk = 1000);

// CSV with header "sample,label,d0,...". `layer` is 1-based (z_layer); rows
// follow the dataset order.
void export_activations(const NetworkParams& params, const Dataset& sample, int layer,
                        const std::filesystem::path& path);

struct MetricsRecord {
  std::string run;  // empty outside sweeps
  std::string phase = "epoch";  // epoch | selected
  int epoch = 0;
  std::optional<int> batch;
  Algorithm algorithm = Algorithm::Backprop;
  std::optional<double> train_error;
  std::optional<double> validation_error;
  std::optional<double> test_error;
  double output_loss = 0.0;
  double total_discrepancy = 0.0;
  std::vector<double> layer_losses;
  std::optional<double> angle;  // degrees, mean over the epoch's batches
  std::optional<double> angle_ema;
  std::size_t matmul_count = 0;

  // Throws ConfigError when a rate or angle is out of range.
  void check() const;
};

std::string metrics_header();
std::string to_csv_row(const MetricsRecord& r);

// Append-only CSV sink; every write is serialized and flushed.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path, bool write_header = true);
  void write(const MetricsRecord& r);
  void write_raw(const std::string& line);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mutex_;
};

// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace localprop
