#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "localprop/algos.hpp"
#include "localprop/data.hpp"
#include "localprop/diagnostics.hpp"
#include "localprop/init.hpp"
#include "localprop/optim.hpp"

namespace localprop {

inline constexpr const char* kDataRootEnv = "LOCALPROP_DATA_ROOT";

struct ExperimentConfig {
  std::string dataset = "mnist";  // mnist | fashion-mnist
  std::filesystem::path data_dir;  // empty: $LOCALPROP_DATA_ROOT/<dataset>
  int depth = 3;                   // hidden layers; weight layers = depth + 1
  int width = 256;
  Algorithm algorithm = Algorithm::LraE;
  AlgoConfig algo;
  InitScheme init = InitScheme::gaussian();
  OptimSettings optim;
  int epochs = 100;
  std::size_t batch_size = 50;
  std::size_t validation_count = 2000;
  std::size_t train_limit = 0;  // 0 keeps the whole training split
  std::uint64_t init_seed = 1;
  std::uint64_t shuffle_seed = 2;
  std::uint64_t noise_seed = 3;
  std::uint64_t split_seed = 4;
  bool track_angle = false;  // per-batch angle to a backprop update on the same batch
  int angle_epochs = 20;
  double angle_ema_decay = 0.99;
  bool save_checkpoints = true;
  int jobs = 1;  // sweep worker threads
  std::filesystem::path output_dir = "runs/default";
  std::vector<std::string> overrides;  // keys passed through set(), in first-set order

  // Defaults for `a`: SGD 0.01 for backprop, RFA, DFA and LRA-E;
  // RMSprop 0.001 for the DTP variants. Gaussian(0.05) init for LRA-E, fan-in-fan-out otherwise.
  static ExperimentConfig defaults_for(Algorithm a);

  // Flat `key = value` text, '#' starts a comment. The algorithm key is read
  // first so unspecified keys take that algorithm's defaults. `later` pairs
  // are applied after the text and win over it.
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig parse(const std::string& text,
                                const std::vector<std::pair<std::string, std::string>>& later);
  static ExperimentConfig load(const std::filesystem::path& path,
                               const std::vector<std::pair<std::string, std::string>>& later = {});
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  // Every key with its effective value, one per line, in a fixed order.
  std::string echo() const;
  void validate() const;
  std::filesystem::path resolved_data_dir() const;
};

// Test split behind an interface that only scores a selected snapshot.
class HeldOutTest {
 public:
  HeldOutTest() = default;
  explicit HeldOutTest(Dataset ds) : ds_(std::move(ds)) {}
  double evaluate_selected(const NetworkParams& selected) const { return evaluate(selected, ds_); }
  std::size_t size() const { return ds_.size(); }

 private:
  Dataset ds_;
};

struct ExperimentData {
  Dataset train;
  Dataset validation;
  HeldOutTest test;
};

ExperimentData load_experiment_data(const ExperimentConfig& cfg);

struct AngleSample {
  int epoch = 0;
  int batch = 0;
  double angle = 0.0;
  double ema = 0.0;
};

struct RunResult {
  int best_epoch = 0;
  double best_validation_error = 100.0;
  double train_error = 100.0;  // at best_epoch
  double test_error = 100.0;   // best-validation snapshot on the held-out test split
  std::vector<MetricsRecord> records;  // epoch 0..last completed
  std::vector<AngleSample> angles;
  std::filesystem::path checkpoint;  // best-validation snapshot, empty when not saved
  bool diverged = false;
  std::string failure;
};

struct TrainOptions {
  // Rethrow DivergenceError; otherwise stop and report the best epoch so far.
  bool throw_on_divergence = true;
  std::string run_id;
  bool quiet = true;
};

// Output divergence threshold.
inline constexpr double kDivergenceLoss = 1e6;

// Writes run.log, metrics.csv, angles.csv (when tracked) and checkpoints under
// cfg.output_dir. Test data is touched once, after training, on the snapshot
// with the lowest validation error.
RunResult train(const ExperimentConfig& cfg, const ExperimentData& data, const TrainOptions& opts = {});
RunResult train(const ExperimentConfig& cfg);

// Rebuilds a RunResult from the metrics.csv / angles.csv of a finished run.
RunResult read_run(const std::filesystem::path& output_dir);

struct Checkpoint {
  NetworkParams params;
  std::string config;  // echo() of the producing config
  int epoch = 0;
};

// Little-endian binary: "LPCKPT\0\0", u32 version, u32 byte-order mark
// 0x01020304, then the config text, epoch and every matrix as IEEE-754 doubles.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct SweepAxes {
  std::vector<int> depths;
  std::vector<InitScheme> inits;
  std::vector<Algorithm> algorithms;

  // "depth=5,8;init=ortho,gloro,g;algorithm=dtp,dtp-sigma"
  static SweepAxes parse(const std::string& text);
  std::size_t size() const;
};

struct SweepRun {
  std::string id;
  ExperimentConfig cfg;
  std::optional<RunResult> result;
  std::string error;  // set when the run threw before producing a result
};

// One train per grid point under base.output_dir/<id>. Writes comparison.csv
// (every epoch row of every run) and summary.csv (one row per run). Failed
// runs are recorded and the sweep carries on.
std::vector<SweepRun> sweep(const ExperimentConfig& base, const SweepAxes& axes, const ExperimentData& data);
std::vector<SweepRun> sweep(const ExperimentConfig& base, const SweepAxes& axes);

}  // namespace localprop
