#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "localprop/errors.hpp"
#include "localprop/harness.hpp"

namespace localprop {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": '" + v + "' is not a number");
  return d;
}

long long to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long n = 0;
  try {
    n = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": '" + v + "' is not an integer");
  return n;
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
  const long long n = to_int(key, v);
  if (n < 0) throw ConfigError(key + " must be non-negative");
  return static_cast<std::uint64_t>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": '" + v + "' is not a boolean");
}

std::string lra_variant_name(LraVariant v) { return v == LraVariant::V1 ? "v1" : "v2"; }
std::string signal_name(LraOutputSignal s) {
  return s == LraOutputSignal::SoftmaxDelta ? "softmax_delta" : "error_unit";
}
std::string target_form_name(DtpTargetForm f) {
  return f == DtpTargetForm::CanonicalDifference ? "difference" : "sum";
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Key {
  const char* name;
  Setter set;
  Getter get;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"algorithm", [](auto& c, auto&, auto& v) { c.algorithm = parse_algorithm(v); },
       [](auto& c) { return std::string(to_string(c.algorithm)); }},
      {"dataset", [](auto& c, auto&, auto& v) { c.dataset = v; }, [](auto& c) { return c.dataset; }},
      {"data_dir", [](auto& c, auto&, auto& v) { c.data_dir = v; }, [](auto& c) { return c.data_dir.string(); }},
      {"depth", [](auto& c, auto& k, auto& v) { c.depth = static_cast<int>(to_int(k, v)); },
       [](auto& c) { return std::to_string(c.depth); }},
      {"width", [](auto& c, auto& k, auto& v) { c.width = static_cast<int>(to_int(k, v)); },
       [](auto& c) { return std::to_string(c.width); }},
      {"init", [](auto& c, auto&, auto& v) {
         const double var = c.init.variance;
         c.init = InitScheme::parse(v);
         c.init.variance = var;
       },
       [](auto& c) { return c.init.name(); }},
      {"init_variance", [](auto& c, auto& k, auto& v) { c.init.variance = to_double(k, v); },
       [](auto& c) { return format_double(c.init.variance); }},
      {"optimizer", [](auto& c, auto&, auto& v) { c.optim.rule = parse_optim_rule(v); },
       [](auto& c) { return to_string(c.optim.rule); }},
      {"step", [](auto& c, auto& k, auto& v) { c.optim.step = to_double(k, v); },
       [](auto& c) { return format_double(c.optim.step); }},
      {"rms_decay", [](auto& c, auto& k, auto& v) { c.optim.rms_decay = to_double(k, v); },
       [](auto& c) { return format_double(c.optim.rms_decay); }},
      {"rms_epsilon", [](auto& c, auto& k, auto& v) { c.optim.rms_epsilon = to_double(k, v); },
       [](auto& c) { return format_double(c.optim.rms_epsilon); }},
      {"adam_beta1", [](auto& c, auto& k, auto& v) { c.optim.adam_beta1 = to_double(k, v); },
       [](auto& c) { return format_double(c.optim.adam_beta1); }},
      {"adam_beta2", [](auto& c, auto& k, auto& v) { c.optim.adam_beta2 = to_double(k, v); },
       [](auto& c) { return format_double(c.optim.adam_beta2); }},
      {"adam_epsilon", [](auto& c, auto& k, auto& v) { c.optim.adam_epsilon = to_double(k, v); },
       [](auto& c) { return format_double(c.optim.adam_epsilon); }},
      {"epochs", [](auto& c, auto& k, auto& v) { c.epochs = static_cast<int>(to_int(k, v)); },
       [](auto& c) { return std::to_string(c.epochs); }},
      {"batch_size", [](auto& c, auto& k, auto& v) { c.batch_size = to_seed(k, v); },
       [](auto& c) { return std::to_string(c.batch_size); }},
      {"validation_count", [](auto& c, auto& k, auto& v) { c.validation_count = to_seed(k, v); },
       [](auto& c) { return std::to_string(c.validation_count); }},
      {"train_limit", [](auto& c, auto& k, auto& v) { c.train_limit = to_seed(k, v); },
       [](auto& c) { return std::to_string(c.train_limit); }},
      {"init_seed", [](auto& c, auto& k, auto& v) { c.init_seed = to_seed(k, v); },
       [](auto& c) { return std::to_string(c.init_seed); }},
      {"shuffle_seed", [](auto& c, auto& k, auto& v) { c.shuffle_seed = to_seed(k, v); },
       [](auto& c) { return std::to_string(c.shuffle_seed); }},
      {"noise_seed", [](auto& c, auto& k, auto& v) { c.noise_seed = to_seed(k, v); },
       [](auto& c) { return std::to_string(c.noise_seed); }},
      {"split_seed", [](auto& c, auto& k, auto& v) { c.split_seed = to_seed(k, v); },
       [](auto& c) { return std::to_string(c.split_seed); }},
      {"beta", [](auto& c, auto& k, auto& v) { c.algo.beta = to_double(k, v); },
       [](auto& c) { return format_double(c.algo.beta); }},
      {"gamma", [](auto& c, auto& k, auto& v) { c.algo.gamma = to_double(k, v); },
       [](auto& c) { return format_double(c.algo.gamma); }},
      {"alpha", [](auto& c, auto& k, auto& v) { c.algo.alpha = to_double(k, v); },
       [](auto& c) { return format_double(c.algo.alpha); }},
      {"hidden_loss", [](auto& c, auto&, auto& v) {
         const double var = c.algo.hidden_loss.variance;
         c.algo.hidden_loss = LossFamily::parse(v);
         c.algo.hidden_loss.variance = var;
       },
       [](auto& c) { return c.algo.hidden_loss.name(); }},
      {"hidden_loss_variance", [](auto& c, auto& k, auto& v) { c.algo.hidden_loss.variance = to_double(k, v); },
       [](auto& c) { return format_double(c.algo.hidden_loss.variance); }},
      {"output_loss", [](auto& c, auto&, auto& v) { c.algo.output_loss = LossFamily::parse(v); },
       [](auto& c) { return c.algo.output_loss.name(); }},
      {"lra_variant", [](auto& c, auto& k, auto& v) {
         if (v == "v1") c.algo.lra_variant = LraVariant::V1;
         else if (v == "v2") c.algo.lra_variant = LraVariant::V2;
         else throw ConfigError(k + ": expected v1 or v2");
       },
       [](auto& c) { return lra_variant_name(c.algo.lra_variant); }},
      {"lra_output_signal", [](auto& c, auto& k, auto& v) {
         if (v == "softmax_delta") c.algo.lra_output_signal = LraOutputSignal::SoftmaxDelta;
         else if (v == "error_unit") c.algo.lra_output_signal = LraOutputSignal::ErrorUnit;
         else throw ConfigError(k + ": expected softmax_delta or error_unit");
       },
       [](auto& c) { return signal_name(c.algo.lra_output_signal); }},
      {"lra_feedback_rule", [](auto& c, auto& k, auto& v) {
         if (v == "literal") c.algo.lra_feedback_rule = LraFeedbackRule::Literal;
         else if (v == "tracking") c.algo.lra_feedback_rule = LraFeedbackRule::Tracking;
         else throw ConfigError(k + ": expected literal or tracking");
       },
       [](auto& c) {
         return std::string(c.algo.lra_feedback_rule == LraFeedbackRule::Literal ? "literal" : "tracking");
       }},
      {"dtp_target_form", [](auto& c, auto& k, auto& v) {
         if (v == "difference") c.algo.dtp_target_form = DtpTargetForm::CanonicalDifference;
         else if (v == "sum") c.algo.dtp_target_form = DtpTargetForm::SumOfDecodings;
         else throw ConfigError(k + ": expected difference or sum");
       },
       [](auto& c) { return target_form_name(c.algo.dtp_target_form); }},
      {"sigma_floor", [](auto& c, auto& k, auto& v) { c.algo.sigma_floor = to_double(k, v); },
       [](auto& c) { return format_double(c.algo.sigma_floor); }},
      {"dtp_sigma", [](auto& c, auto& k, auto& v) { c.algo.dtp_sigma = to_double(k, v); },
       [](auto& c) { return format_double(c.algo.dtp_sigma); }},
      {"dtp_top_step", [](auto& c, auto& k, auto& v) { c.algo.dtp_top_step = to_double(k, v); },
       [](auto& c) { return format_double(c.algo.dtp_top_step); }},
      {"clamp_targets", [](auto& c, auto& k, auto& v) { c.algo.clamp_targets = to_bool(k, v); },
       [](auto& c) { return std::string(c.algo.clamp_targets ? "true" : "false"); }},
      {"track_angle", [](auto& c, auto& k, auto& v) { c.track_angle = to_bool(k, v); },
       [](auto& c) { return std::string(c.track_angle ? "true" : "false"); }},
      {"angle_epochs", [](auto& c, auto& k, auto& v) { c.angle_epochs = static_cast<int>(to_int(k, v)); },
       [](auto& c) { return std::to_string(c.angle_epochs); }},
      {"angle_ema_decay", [](auto& c, auto& k, auto& v) { c.angle_ema_decay = to_double(k, v); },
       [](auto& c) { return format_double(c.angle_ema_decay); }},
      {"save_checkpoints", [](auto& c, auto& k, auto& v) { c.save_checkpoints = to_bool(k, v); },
       [](auto& c) { return std::string(c.save_checkpoints ? "true" : "false"); }},
      {"jobs", [](auto& c, auto& k, auto& v) { c.jobs = static_cast<int>(to_int(k, v)); },
       [](auto& c) { return std::to_string(c.jobs); }},
      {"output_dir", [](auto& c, auto&, auto& v) { c.output_dir = v; },
       [](auto& c) { return c.output_dir.string(); }},
  };
  return table;
}

std::vector<std::pair<std::string, std::string>> parse_pairs(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults_for(Algorithm a) {
  ExperimentConfig c;
  c.algorithm = a;
  switch (a) {
    case Algorithm::LraE:
      c.optim.rule = OptimRule::Sgd;
      c.optim.step = 0.01;
      c.init = InitScheme::gaussian(0.05);
      break;
    case Algorithm::Backprop:
    case Algorithm::Rfa:
    case Algorithm::Dfa:
      c.optim.rule = OptimRule::Sgd;
      c.optim.step = 0.01;
      c.init = InitScheme::fan_in_fan_out();
      break;
    case Algorithm::Dtp:
    case Algorithm::DtpSigma:
      c.optim.rule = OptimRule::RmsProp;
      c.optim.step = 0.001;
      c.init = InitScheme::fan_in_fan_out();
      break;
  }
  return c;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& k : keys()) {
    if (key == k.name) {
      k.set(*this, key, value);
      if (std::find(overrides.begin(), overrides.end(), key) == overrides.end()) overrides.push_back(key);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string ExperimentConfig::get(const std::string& key) const {
  for (const auto& k : keys()) {
    if (key == k.name) return k.get(*this);
  }
  throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) { return parse(text, {}); }

ExperimentConfig ExperimentConfig::parse(const std::string& text,
                                         const std::vector<std::pair<std::string, std::string>>& later) {
  auto pairs = parse_pairs(text);
  Algorithm algo = Algorithm::LraE;
  for (const auto& [k, v] : pairs) {
    if (k == "algorithm") algo = parse_algorithm(v);
  }
  for (const auto& [k, v] : later) {
    if (k == "algorithm") algo = parse_algorithm(v);
  }
  ExperimentConfig c = defaults_for(algo);
  std::map<std::string, int> seen;
  for (const auto& [k, v] : pairs) {
    if (++seen[k] > 1) throw ConfigError("duplicate config key '" + k + "'");
    c.set(k, v);
  }
  for (const auto& [k, v] : later) c.set(k, v);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path,
                                        const std::vector<std::pair<std::string, std::string>>& later) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse(s.str(), later);
}

std::string ExperimentConfig::echo() const {
  std::string out;
  for (const auto& k : keys()) out += std::string(k.name) + " = " + k.get(*this) + "\n";
  return out;
}

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw ConfigError("dataset must be set");
  if (depth < 1) throw ConfigError("depth must be at least 1");
  if (width < 1) throw ConfigError("width must be at least 1");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (angle_epochs < 0) throw ConfigError("angle_epochs must be non-negative");
  if (!(angle_ema_decay >= 0.0 && angle_ema_decay < 1.0)) throw ConfigError("angle_ema_decay must lie in [0, 1)");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  if (track_angle && algorithm == Algorithm::Backprop) throw ConfigError("track_angle compares against backprop");
  if (output_dir.empty()) throw ConfigError("output_dir must be set");
  algo.validate();
  init.validate();
  optim.validate();
}

std::filesystem::path ExperimentConfig::resolved_data_dir() const {
  if (!data_dir.empty()) return data_dir;
  const char* root = std::getenv(kDataRootEnv);
  if (!root || !*root) {
    throw ConfigError(std::string("data_dir not set and $") + kDataRootEnv + " is empty");
  }
  return std::filesystem::path(root) / dataset;
}

}  // namespace localprop
