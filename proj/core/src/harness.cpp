#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "localprop/build_info.hpp"
#include "localprop/errors.hpp"
#include "localprop/harness.hpp"

namespace localprop {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t k) { return splitmix64(seed ^ splitmix64(k)); }

// First layer whose activity went non-finite; the output layer otherwise.
int blame_layer(const ForwardTrace& trace) {
  for (int i = 0; i < trace.depth(); ++i) {
    if (!trace.post[i].allFinite()) return i;
  }
  return trace.depth() - 1;
}

class RunLog {
 public:
  RunLog(const std::filesystem::path& path, bool echo) : out_(path, std::ios::trunc), echo_(echo) {
    if (!out_) throw std::runtime_error("cannot open run log " + path.string());
  }
  void line(const std::string& s) {
    out_ << s << '\n';
    out_.flush();
    if (echo_) std::cout << s << std::endl;
  }

 private:
  std::ofstream out_;
  bool echo_;
};

std::string describe(const Dataset& ds) {
  std::ostringstream s;
  s << ds.size() << " samples, checksum " << std::hex << checksum(ds);
  return s.str();
}

}  // namespace

ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
  const auto files = locate_dataset(cfg.resolved_data_dir());
  const Dataset full = load_idx(files.train_images, files.train_labels, cfg.dataset + "-train");
  auto [train, validation] = split(full, SplitSpec{cfg.validation_count, cfg.split_seed});
  if (cfg.train_limit > 0 && cfg.train_limit < train.size()) {
    std::vector<std::size_t> head(cfg.train_limit);
    for (std::size_t k = 0; k < head.size(); ++k) head[k] = k;
    train = train.subset(head);
  }
  train.name = cfg.dataset + "-train";
  validation.name = cfg.dataset + "-validation";
  return {std::move(train), std::move(validation),
          HeldOutTest(load_idx(files.test_images, files.test_labels, cfg.dataset + "-test"))};
}

RunResult train(const ExperimentConfig& cfg) { return train(cfg, load_experiment_data(cfg)); }

RunResult train(const ExperimentConfig& cfg, const ExperimentData& data, const TrainOptions& opts) {
  cfg.validate();
  if (data.train.size() == 0) throw ConfigError("training split is empty");
  std::filesystem::create_directories(cfg.output_dir);
  RunLog log(cfg.output_dir / "run.log", !opts.quiet);
  log.line("# localprop " + std::string(kVersion) + " (source " + kSourceFingerprint + ")");
  log.line("# config");
  {
    std::istringstream echo(cfg.echo());
    for (std::string l; std::getline(echo, l);) log.line(l);
  }
  log.line("# train: " + describe(data.train));
  log.line("# validation: " + describe(data.validation));
  log.line("# test: " + std::to_string(data.test.size()) + " samples, scored once after selection");

  const auto specs = mlp_specs(static_cast<int>(data.train.images.cols()), cfg.width, cfg.depth, kNumClasses);
  NetworkParams params = init_params(specs, cfg.init, cfg.init_seed, feedback_layout(cfg.algorithm));
  OptimState optim = make_optimizer(cfg.optim, params);
  MetricsWriter metrics(cfg.output_dir / "metrics.csv");
  std::unique_ptr<std::ofstream> angle_out;
  if (cfg.track_angle) {
    angle_out = std::make_unique<std::ofstream>(cfg.output_dir / "angles.csv", std::ios::trunc);
    *angle_out << "epoch,batch,angle,ema,layer_angles\n";
  }

  RunResult result;
  NetworkParams best = params;
  std::size_t last_count = 0;
  const int L = params.depth();

  auto epoch_record = [&](int epoch, std::optional<double> angle, std::optional<double> ema) {
    MetricsRecord r;
    r.run = opts.run_id;
    r.epoch = epoch;
    r.algorithm = cfg.algorithm;
    r.train_error = evaluate(params, data.train);
    r.validation_error = evaluate(params, data.validation);
    r.layer_losses = mean_layer_losses(cfg.algorithm, params, data.validation, cfg.algo);
    r.output_loss = r.layer_losses.back();
    r.total_discrepancy = total_discrepancy(r.layer_losses);
    r.angle = angle;
    r.angle_ema = ema;
    r.matmul_count = last_count;
    if (!std::isfinite(r.output_loss) || r.output_loss > kDivergenceLoss) {
      throw DivergenceError("validation output loss " + format_double(r.output_loss) + " at epoch " +
                                std::to_string(epoch),
                            epoch, -1, L - 1);
    }
    metrics.write(r);
    result.records.push_back(r);
    if (*r.validation_error < result.best_validation_error || epoch == 0) {
      result.best_validation_error = *r.validation_error;
      result.best_epoch = epoch;
      result.train_error = *r.train_error;
      best = params;
    }
    std::ostringstream s;
    s << "epoch " << epoch << " train " << std::fixed << std::setprecision(2) << *r.train_error << "% val "
      << *r.validation_error << "% loss " << std::setprecision(4) << r.output_loss << " D " << r.total_discrepancy;
    if (angle) s << " angle " << std::setprecision(2) << *angle;
    log.line(s.str());
  };

  const auto t0 = std::chrono::steady_clock::now();
  double ema = 0.0;
  bool have_ema = false;
  try {
    epoch_record(0, std::nullopt, std::nullopt);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
      const EpochBatches batches(data.train, cfg.batch_size, mix(cfg.shuffle_seed, static_cast<std::uint64_t>(epoch)));
      const bool angles_now = cfg.track_angle && epoch <= cfg.angle_epochs;
      double angle_sum = 0.0;
      int angle_n = 0;
      for (std::size_t k = 0; k < batches.size(); ++k) {
        const Batch b = batches[k];
        const std::uint64_t noise = mix(mix(cfg.noise_seed, static_cast<std::uint64_t>(epoch)), k);
        const int batch_no = static_cast<int>(k);
        OpCounter counter;
        CreditAssignment ca;
        try {
          ca = assign_credit(cfg.algorithm, params, b.x, b.y, cfg.algo, noise, &counter);
        } catch (const NumericError& e) {
          throw DivergenceError(e.what(), epoch, batch_no, e.layer());
        }
        last_count = counter.target_products;
        const double loss = ca.layer_losses.back();
        if (!std::isfinite(loss) || loss > kDivergenceLoss) {
          throw DivergenceError("output loss " + format_double(loss), epoch, batch_no, blame_layer(ca.trace));
        }
        if (angles_now) {
          const UpdateSet bp = backprop_updates(params, ca.trace, b.y);
          try {
            const double a = update_angle(ca.updates, bp);
            ema = have_ema ? cfg.angle_ema_decay * ema + (1.0 - cfg.angle_ema_decay) * a : a;
            have_ema = true;
            angle_sum += a;
            ++angle_n;
            result.angles.push_back({epoch, batch_no, a, ema});
            *angle_out << epoch << ',' << batch_no << ',' << format_double(a) << ',' << format_double(ema) << ',';
            for (int i = 0; i < L; ++i) {
              if (i) *angle_out << ';';
              double la = std::nan("");
              try {
                la = layer_angle(ca.updates, bp, i);
              } catch (const NumericError&) {
              }
              *angle_out << format_double(la);
            }
            *angle_out << '\n';
          } catch (const NumericError&) {
            // zero update on one side: the angle is undefined for this batch
          }
        }
        try {
          apply_update(optim, params, ca.updates);
        } catch (const NumericError& e) {
          throw DivergenceError(e.what(), epoch, batch_no, e.layer());
        }
      }
      if (angle_out) angle_out->flush();
      std::optional<double> mean_angle, ema_now;
      if (angle_n > 0) {
        mean_angle = angle_sum / angle_n;
        ema_now = ema;
      }
      epoch_record(epoch, mean_angle, ema_now);
    }
  } catch (const DivergenceError& e) {
    std::ostringstream s;
    s << "diverged at epoch " << e.epoch() << " batch " << e.batch() << " layer " << e.layer() << ": " << e.what();
    log.line(s.str());
    std::ofstream(cfg.output_dir / "divergence.txt") << s.str() << '\n';
    if (opts.throw_on_divergence) throw;
    result.diverged = true;
    result.failure = s.str();
  }

  result.test_error = data.test.evaluate_selected(best);
  MetricsRecord sel;
  sel.run = opts.run_id;
  sel.phase = "selected";
  sel.epoch = result.best_epoch;
  sel.algorithm = cfg.algorithm;
  sel.train_error = result.train_error;
  sel.validation_error = result.best_validation_error;
  sel.test_error = result.test_error;
  for (const auto& r : result.records) {
    if (r.epoch == result.best_epoch) {
      sel.output_loss = r.output_loss;
      sel.total_discrepancy = r.total_discrepancy;
      sel.layer_losses = r.layer_losses;
      sel.matmul_count = r.matmul_count;
    }
  }
  metrics.write(sel);

  if (cfg.save_checkpoints) {
    result.checkpoint = cfg.output_dir / "best.ckpt";
    save_checkpoint({best, cfg.echo(), result.best_epoch}, result.checkpoint);
    if (!result.diverged) {
      save_checkpoint({params, cfg.echo(), static_cast<int>(result.records.back().epoch)}, cfg.output_dir / "final.ckpt");
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream s;
  s << "selected epoch " << result.best_epoch << " (lowest validation error " << result.best_validation_error
    << "%): train " << result.train_error << "%, test " << result.test_error << "%; " << std::fixed
    << std::setprecision(1) << seconds << " s";
  log.line(s.str());
  return result;
}

namespace {

std::vector<std::string> split_csv(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<double> opt_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

}  // namespace

RunResult read_run(const std::filesystem::path& output_dir) {
  std::ifstream in(output_dir / "metrics.csv");
  if (!in) throw DataError("no metrics.csv under " + output_dir.string());
  std::string line;
  std::getline(in, line);
  if (line != metrics_header()) throw DataError(output_dir.string() + ": unexpected metrics header");
  RunResult result;
  bool selected = false;
  while (std::getline(in, line)) {
    const auto f = split_csv(line);
    if (f.size() != 14) throw DataError(output_dir.string() + ": malformed metrics row");
    MetricsRecord r;
    r.run = f[0];
    r.phase = f[1];
    r.epoch = std::stoi(f[2]);
    if (!f[3].empty()) r.batch = std::stoi(f[3]);
    r.algorithm = parse_algorithm(f[4]);
    r.train_error = opt_double(f[5]);
    r.validation_error = opt_double(f[6]);
    r.test_error = opt_double(f[7]);
    r.output_loss = std::stod(f[8]);
    r.total_discrepancy = std::stod(f[9]);
    if (!f[10].empty()) {
      for (const auto& v : split_csv(f[10], ';')) r.layer_losses.push_back(std::stod(v));
    }
    r.angle = opt_double(f[11]);
    r.angle_ema = opt_double(f[12]);
    r.matmul_count = std::stoull(f[13]);
    if (r.phase == "selected") {
      selected = true;
      result.best_epoch = r.epoch;
      result.train_error = r.train_error.value_or(100.0);
      result.best_validation_error = r.validation_error.value_or(100.0);
      result.test_error = r.test_error.value_or(100.0);
    } else {
      result.records.push_back(std::move(r));
    }
  }
  if (!selected) throw DataError(output_dir.string() + ": run did not finish");
  if (std::ifstream div(output_dir / "divergence.txt"); div) {
    result.diverged = true;
    std::getline(div, result.failure);
  }
  if (std::ifstream ang(output_dir / "angles.csv"); ang) {
    std::getline(ang, line);
    while (std::getline(ang, line)) {
      const auto f = split_csv(line);
      if (f.size() < 4) throw DataError(output_dir.string() + ": malformed angles row");
      result.angles.push_back({std::stoi(f[0]), std::stoi(f[1]), std::stod(f[2]), std::stod(f[3])});
    }
  }
  if (std::filesystem::exists(output_dir / "best.ckpt")) result.checkpoint = output_dir / "best.ckpt";
  return result;
}

}  // namespace localprop
