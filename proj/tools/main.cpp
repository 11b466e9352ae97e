// localprop command line: train, sweep, eval, export-activations.
#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

#include "localprop/errors.hpp"
#include "localprop/harness.hpp"

using namespace localprop;

namespace {

ExperimentConfig config_from(const std::string& path, const std::vector<std::string>& sets) {
  std::vector<std::pair<std::string, std::string>> later;
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    later.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return path.empty() ? ExperimentConfig::parse("", later) : ExperimentConfig::load(path, later);
}

// The checkpoint carries the config echo; data paths can still be redirected.
ExperimentConfig checkpoint_config(const Checkpoint& ckpt, const std::string& data_dir) {
  ExperimentConfig cfg = ExperimentConfig::parse(ckpt.config);
  if (!data_dir.empty()) cfg.data_dir = data_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local credit-assignment training for dense networks"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;

  auto* train_cmd = app.add_subcommand("train", "Train one configuration");
  train_cmd->add_option("--config", config_path, "key = value config file");
  train_cmd->add_option("--set", sets, "Override a config key (key=value), repeatable");

  std::string axes_text;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train every point of a depth x init x algorithm grid");
  sweep_cmd->add_option("--config", config_path, "Base config file");
  sweep_cmd->add_option("--set", sets, "Override a base config key (key=value), repeatable");
  sweep_cmd->add_option("--axes", axes_text, "e.g. \"depth=5,8;init=ortho,gloro,g;algorithm=dtp,dtp-sigma\"")
      ->required();

  std::string checkpoint_path, split_name = "test", data_dir;
  auto* eval_cmd = app.add_subcommand("eval", "Error rate of a checkpoint on one split");
  eval_cmd->add_option("--checkpoint", checkpoint_path)->required();
  eval_cmd->add_option("--split", split_name)->check(CLI::IsMember({"train", "validation", "test"}));
  eval_cmd->add_option("--data-dir", data_dir, "Dataset directory (default from the checkpoint config)");

  int layer = 0;
  std::size_t samples = 1000;
  std::string out_path = "activations.csv";
  auto* export_cmd = app.add_subcommand("export-activations", "Dump one layer's activity as CSV");
  export_cmd->add_option("--checkpoint", checkpoint_path)->required();
  export_cmd->add_option("--layer", layer, "1-based layer index")->required();
  export_cmd->add_option("--split", split_name)->check(CLI::IsMember({"train", "validation", "test"}));
  export_cmd->add_option("--samples", samples, "Leading samples of the split to export");
  export_cmd->add_option("--out", out_path);
  export_cmd->add_option("--data-dir", data_dir);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      const ExperimentConfig cfg = config_from(config_path, sets);
      TrainOptions opts;
      opts.quiet = false;
      const RunResult r = train(cfg, load_experiment_data(cfg), opts);
      std::cout << "best epoch " << r.best_epoch << ": validation " << r.best_validation_error << "%, test "
                << r.test_error << "%\n";
    } else if (*sweep_cmd) {
      const ExperimentConfig cfg = config_from(config_path, sets);
      const auto axes = SweepAxes::parse(axes_text);
      std::cout << "sweeping " << axes.size() << " runs into " << cfg.output_dir << "\n";
      const auto runs = sweep(cfg, axes);
      for (const auto& r : runs) {
        std::cout << std::left << std::setw(32) << r.id;
        if (r.result) {
          std::cout << (r.result->diverged ? "diverged " : "") << "best val " << r.result->best_validation_error
                    << "% test " << r.result->test_error << "%\n";
        } else {
          std::cout << "failed: " << r.error << "\n";
        }
      }
    } else if (*eval_cmd || *export_cmd) {
      const Checkpoint ckpt = load_checkpoint(checkpoint_path);
      const ExperimentConfig cfg = checkpoint_config(ckpt, data_dir);
      const auto files = locate_dataset(cfg.resolved_data_dir());
      Dataset ds;
      if (split_name == "test") {
        ds = load_idx(files.test_images, files.test_labels, cfg.dataset + "-test");
      } else {
        auto [tr, va] = split(load_idx(files.train_images, files.train_labels, cfg.dataset + "-train"),
                              SplitSpec{cfg.validation_count, cfg.split_seed});
        ds = split_name == "train" ? std::move(tr) : std::move(va);
      }
      if (*eval_cmd) {
        std::cout << split_name << " error " << evaluate(ckpt.params, ds) << "% (" << ds.size() << " samples, epoch "
                  << ckpt.epoch << ")\n";
      } else {
        std::vector<std::size_t> head(std::min(samples, ds.size()));
        for (std::size_t k = 0; k < head.size(); ++k) head[k] = k;
        export_activations(ckpt.params, ds.subset(head), layer, out_path);
        std::cout << "wrote " << head.size() << " rows to " << out_path << "\n";
      }
    }
  } catch (const DivergenceError& e) {
    std::cerr << "diverged (epoch " << e.epoch() << ", batch " << e.batch() << ", layer " << e.layer()
              << "): " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
