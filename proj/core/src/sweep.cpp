#include <algorithm>
#include <atomic>
#include <optional>
#include <fstream>
#include <thread>

#include "localprop/errors.hpp"
#include "localprop/harness.hpp"

namespace localprop {
namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

bool overridden(const ExperimentConfig& c, const std::string& key) {
  return std::find(c.overrides.begin(), c.overrides.end(), key) != c.overrides.end();
}

// Config for one grid point: the base with the axis values swapped in. Keys
// that follow the algorithm (optimizer, step, init) take the new algorithm's
// defaults unless the base set them explicitly.
ExperimentConfig grid_config(const ExperimentConfig& base, int depth, const std::optional<InitScheme>& init,
                             Algorithm a) {
  const ExperimentConfig d = ExperimentConfig::defaults_for(a);
  ExperimentConfig c = base;
  c.algorithm = a;
  c.depth = depth;
  if (!overridden(base, "optimizer")) c.optim.rule = d.optim.rule;
  if (!overridden(base, "step")) c.optim.step = d.optim.step;
  if (init) {
    c.init = *init;
    if (init->kind == InitScheme::Kind::Gaussian && overridden(base, "init_variance")) c.init.variance = base.init.variance;
  } else if (!overridden(base, "init")) {
    c.init = d.init;
  }
  if (c.track_angle && a == Algorithm::Backprop) c.track_angle = false;
  return c;
}

}  // namespace

SweepAxes SweepAxes::parse(const std::string& text) {
  SweepAxes axes;
  for (const auto& part : split(text, ';')) {
    const std::string item = strip(part);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("sweep axis '" + item + "' needs name=values");
    const std::string name = strip(item.substr(0, eq));
    for (const auto& raw : split(item.substr(eq + 1), ',')) {
      const std::string v = strip(raw);
      if (v.empty()) throw ConfigError("empty value on sweep axis " + name);
      if (name == "depth") {
        axes.depths.push_back(std::stoi(v));
      } else if (name == "init") {
        axes.inits.push_back(InitScheme::parse(v));
      } else if (name == "algorithm") {
        axes.algorithms.push_back(parse_algorithm(v));
      } else {
        throw ConfigError("unknown sweep axis '" + name + "'");
      }
    }
  }
  return axes;
}

std::size_t SweepAxes::size() const {
  auto n = [](std::size_t k) { return k == 0 ? std::size_t{1} : k; };
  return n(depths.size()) * n(inits.size()) * n(algorithms.size());
}

std::vector<SweepRun> sweep(const ExperimentConfig& base, const SweepAxes& axes) {
  return sweep(base, axes, load_experiment_data(base));
}

std::vector<SweepRun> sweep(const ExperimentConfig& base, const SweepAxes& axes, const ExperimentData& data) {
  base.validate();
  const std::vector<int> depths = axes.depths.empty() ? std::vector<int>{base.depth} : axes.depths;
  std::vector<std::optional<InitScheme>> inits(axes.inits.begin(), axes.inits.end());
  if (inits.empty()) inits.push_back(std::nullopt);
  const std::vector<Algorithm> algos =
      axes.algorithms.empty() ? std::vector<Algorithm>{base.algorithm} : axes.algorithms;

  std::vector<SweepRun> runs;
  for (int d : depths) {
    for (const auto& init : inits) {
      for (Algorithm a : algos) {
        SweepRun r;
        r.cfg = grid_config(base, d, init, a);
        r.id = std::string(to_string(a)) + "-d" + std::to_string(d) + "-" + r.cfg.init.name();
        r.cfg.output_dir = base.output_dir / r.id;
        runs.push_back(std::move(r));
      }
    }
  }

  std::filesystem::create_directories(base.output_dir);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < runs.size(); k = next++) {
      SweepRun& r = runs[k];
      try {
        r.cfg.validate();
        TrainOptions opts;
        opts.throw_on_divergence = false;
        opts.run_id = r.id;
        r.result = train(r.cfg, data, opts);
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  const int jobs = std::min<int>(base.jobs, static_cast<int>(runs.size()));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  MetricsWriter comparison(base.output_dir / "comparison.csv");
  std::ofstream summary(base.output_dir / "summary.csv", std::ios::trunc);
  summary << "run,algorithm,depth,init,status,best_epoch,best_validation_error,train_error,test_error,detail\n";
  for (const auto& r : runs) {
    summary << r.id << ',' << to_string(r.cfg.algorithm) << ',' << r.cfg.depth << ',' << r.cfg.init.name() << ',';
    if (!r.result) {
      std::string detail = r.error;
      for (char& ch : detail) {
        if (ch == ',' || ch == '\n') ch = ' ';
      }
      summary << "failed,,,,," << detail << '\n';
      continue;
    }
    for (const auto& rec : r.result->records) {
      if (rec.epoch > 0) comparison.write(rec);
    }
    std::string detail = r.result->failure;
    for (char& ch : detail) {
      if (ch == ',' || ch == '\n') ch = ' ';
    }
    summary << (r.result->diverged ? "diverged" : "ok") << ',' << r.result->best_epoch << ','
            << format_double(r.result->best_validation_error) << ',' << format_double(r.result->train_error) << ','
            << format_double(r.result->test_error) << ',' << detail << '\n';
  }
  return runs;
}

}  // namespace localprop
