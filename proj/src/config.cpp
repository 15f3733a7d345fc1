// SPDX-License-Identifier: Apache-2.0

#include "ogc/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace ogc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

bool parse_number(const std::string& s, ConfigValue& out) {
  if (s.empty()) return false;
  const bool looks_float = s.find_first_of(".eEn") != std::string::npos;
  errno = 0;
  char* end = nullptr;
  if (!looks_float) {
    const long v = std::strtol(s.c_str(), &end, 10);
    if (errno == 0 && end && *end == '\0') {
      out = v;
      return true;
    }
    return false;
  }
  const double v = std::strtod(s.c_str(), &end);
  if (errno == 0 && end && *end == '\0' && std::isfinite(v)) {
    out = v;
    return true;
  }
  return false;
}

ConfigValue parse_value(const std::string& raw, int line_no) {
  const std::string s = trim(raw);
  auto fail = [&](const std::string& why) {
    return ConfigError("line " + std::to_string(line_no) + ": " + why + " '" + s + "'");
  };
  if (s.empty()) throw fail("missing value");
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') throw fail("unterminated string");
    const std::string body = s.substr(1, s.size() - 2);
    if (body.find('"') != std::string::npos) throw fail("embedded quote in string");
    return body;
  }
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.front() == '[') {
    if (s.back() != ']') throw fail("unterminated array");
    std::vector<double> items;
    std::stringstream ss(s.substr(1, s.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string t = trim(item);
      if (t.empty()) continue;
      ConfigValue v;
      if (!parse_number(t, v)) throw fail("non-numeric array element");
      items.push_back(std::holds_alternative<long>(v) ? static_cast<double>(std::get<long>(v)) : std::get<double>(v));
    }
    return items;
  }
  ConfigValue v;
  if (parse_number(s, v)) return v;
  throw fail("unrecognized value");
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

struct Field {
  std::string name;
  std::function<void(ExperimentConfig&, const ConfigValue&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

[[noreturn]] void type_error(const std::string& key, const char* expected) {
  throw ConfigError("key '" + key + "' expects " + expected);
}

Field long_field(const char* name, long ExperimentConfig::*m) {
  return {name,
          [=](ExperimentConfig& c, const ConfigValue& v) {
            if (!std::holds_alternative<long>(v)) type_error(name, "an integer");
            c.*m = std::get<long>(v);
          },
          [=](const ExperimentConfig& c) { return std::to_string(c.*m); }};
}

Field seed_field(const char* name, std::uint64_t ExperimentConfig::*m) {
  return {name,
          [=](ExperimentConfig& c, const ConfigValue& v) {
            if (!std::holds_alternative<long>(v) || std::get<long>(v) < 0) type_error(name, "a nonnegative integer");
            c.*m = static_cast<std::uint64_t>(std::get<long>(v));
          },
          [=](const ExperimentConfig& c) { return std::to_string(c.*m); }};
}

Field double_field(const char* name, double ExperimentConfig::*m) {
  return {name,
          [=](ExperimentConfig& c, const ConfigValue& v) {
            if (std::holds_alternative<long>(v)) {
              c.*m = static_cast<double>(std::get<long>(v));
            } else if (std::holds_alternative<double>(v)) {
              c.*m = std::get<double>(v);
            } else {
              type_error(name, "a number");
            }
          },
          [=](const ExperimentConfig& c) { return fmt_double(c.*m); }};
}

Field string_field(const char* name, std::string ExperimentConfig::*m) {
  return {name,
          [=](ExperimentConfig& c, const ConfigValue& v) {
            if (!std::holds_alternative<std::string>(v)) type_error(name, "a quoted string");
            c.*m = std::get<std::string>(v);
          },
          [=](const ExperimentConfig& c) { return "\"" + c.*m + "\""; }};
}

Field list_field(const char* name, std::vector<double> ExperimentConfig::*m) {
  return {name,
          [=](ExperimentConfig& c, const ConfigValue& v) {
            if (!std::holds_alternative<std::vector<double>>(v)) type_error(name, "an array of numbers");
            c.*m = std::get<std::vector<double>>(v);
          },
          [=](const ExperimentConfig& c) {
            std::string s = "[";
            for (std::size_t i = 0; i < (c.*m).size(); ++i) {
              if (i) s += ", ";
              s += fmt_double((c.*m)[i]);
            }
            return s + "]";
          }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> f = {
      string_field("dataset", &C::dataset),
      long_field("n_train", &C::n_train),
      long_field("n_test", &C::n_test),
      long_field("num_classes", &C::num_classes),
      long_field("dim", &C::dim),
      double_field("blob_radius", &C::blob_radius),
      double_field("blob_spread", &C::blob_spread),
      double_field("moons_noise", &C::moons_noise),
      string_field("idx_train_images", &C::idx_train_images),
      string_field("idx_train_labels", &C::idx_train_labels),
      string_field("idx_test_images", &C::idx_test_images),
      string_field("idx_test_labels", &C::idx_test_labels),
      string_field("noise", &C::noise),
      double_field("noise_rate", &C::noise_rate),
      string_field("asym_map", &C::asym_map),
      long_field("asym_group", &C::asym_group),
      long_field("instance_projections", &C::instance_projections),
      string_field("loss", &C::loss),
      double_field("fl_gamma", &C::fl_gamma),
      double_field("gce_q", &C::gce_q),
      string_field("strategy", &C::strategy),
      double_field("epsilon0", &C::epsilon0),
      double_field("fixed_tau", &C::fixed_tau),
      double_field("linear_beta", &C::linear_beta),
      double_field("ema_alpha", &C::ema_alpha),
      long_field("queue_size", &C::queue_size),
      long_field("time_frame", &C::time_frame),
      long_field("warmup", &C::warmup),
      long_field("quad_bins", &C::quad_bins),
      long_field("em_max_iters", &C::em_max_iters),
      double_field("em_tol", &C::em_tol),
      long_field("batch_size", &C::batch_size),
      long_field("epochs", &C::epochs),
      double_field("lr", &C::lr),
      double_field("lr_decay", &C::lr_decay),
      list_field("lr_milestones", &C::lr_milestones),
      double_field("momentum", &C::momentum),
      double_field("weight_decay", &C::weight_decay),
      double_field("param_clip", &C::param_clip),
      list_field("hidden", &C::hidden),
      seed_field("seed", &C::seed),
      seed_field("data_seed", &C::data_seed),
      seed_field("noise_seed", &C::noise_seed),
  };
  return f;
}

bool is_positive_int(double v) { return v >= 1.0 && std::floor(v) == v; }

}  // namespace

std::map<std::string, ConfigValue> parse_key_values(const std::string& text) {
  std::map<std::string, ConfigValue> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = trim(strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[') throw ConfigError("line " + std::to_string(line_no) + ": tables are not supported");
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty() || key.find_first_of(" \t\".") != std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": invalid key '" + key + "'");
    }
    if (out.count(key)) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    out.emplace(key, parse_value(s.substr(eq + 1), line_no));
  }
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : parse_key_values(text)) {
    bool found = false;
    for (const Field& f : fields()) {
      if (f.name == key) {
        f.set(cfg, value);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) out += f.name + " = " + f.get(cfg) + "\n";
  return out;
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(dataset == "blobs" || dataset == "moons" || dataset == "idx", "dataset must be blobs, moons or idx");
  require(n_train >= 1 && n_test >= 1, "n_train and n_test must be >= 1");
  require(num_classes >= 2, "num_classes must be >= 2");
  require(dim >= 2, "dim must be >= 2");
  require(dataset != "moons" || num_classes == 2, "moons is a binary dataset");
  require(blob_spread > 0.0 && moons_noise >= 0.0, "spread/noise must be positive");
  if (dataset == "idx") {
    require(!idx_train_images.empty() && !idx_train_labels.empty() && !idx_test_images.empty() &&
                !idx_test_labels.empty(),
            "idx dataset needs idx_train_images, idx_train_labels, idx_test_images, idx_test_labels");
  }
  require(noise == "none" || noise == "symmetric" || noise == "asymmetric" || noise == "instance",
          "noise must be none, symmetric, asymmetric or instance");
  require(noise_rate >= 0.0 && noise_rate < 1.0, "noise_rate must lie in [0, 1)");
  require(asym_map == "circular" || asym_map == "cifar10", "asym_map must be circular or cifar10");
  require(asym_group >= 0 && instance_projections >= 1, "asym_group >= 0 and instance_projections >= 1 required");
  require(loss == "ce" || loss == "fl" || loss == "gce" || loss == "mae", "loss must be ce, fl, gce or mae");
  require(fl_gamma >= 0.0, "fl_gamma must be >= 0");
  require(gce_q > 0.0 && gce_q <= 1.0, "gce_q must lie in (0, 1]");
  require(strategy == "optimized" || strategy == "fixed" || strategy == "linear" || strategy == "ema" ||
              strategy == "none",
          "strategy must be optimized, fixed, linear, ema or none");
  require(epsilon0 > 0.0, "epsilon0 must be positive");
  require(fixed_tau >= 1.0, "fixed_tau must be >= 1");
  require(linear_beta > 0.0, "linear_beta must be positive");
  require(ema_alpha > 0.0 && ema_alpha < 1.0, "ema_alpha must lie in (0, 1)");
  require(time_frame >= 1, "time_frame must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(queue_size >= batch_size, "queue_size must be >= batch_size");
  require(warmup >= static_cast<long>(kMinGmmSamples) && warmup <= queue_size,
          "warmup must lie in [8, queue_size]");
  require(quad_bins >= 64, "quad_bins must be >= 64");
  require(em_max_iters >= 1 && em_tol > 0.0, "em_max_iters >= 1 and em_tol > 0 required");
  require(epochs >= 1, "epochs must be >= 1");
  require(lr > 0.0 && lr_decay > 0.0, "lr and lr_decay must be positive");
  for (std::size_t i = 0; i < lr_milestones.size(); ++i) {
    require(lr_milestones[i] >= 0.0 && std::floor(lr_milestones[i]) == lr_milestones[i],
            "lr_milestones must be nonnegative integers");
    require(i == 0 || lr_milestones[i] > lr_milestones[i - 1], "lr_milestones must be strictly increasing");
  }
  require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(param_clip > 0.0, "param_clip must be positive");
  for (double h : hidden) require(is_positive_int(h), "hidden widths must be positive integers");
}

BaseLoss ExperimentConfig::base_loss() const { return parse_base_loss(loss, fl_gamma, gce_q); }

NoiseSpec ExperimentConfig::noise_spec() const {
  if (noise == "none") return SymmetricNoise{0.0};
  if (noise == "symmetric") return SymmetricNoise{noise_rate};
  if (noise == "asymmetric") {
    const int k = static_cast<int>(num_classes);
    ClassMap map = asym_map == "cifar10" ? cifar10_asymmetric_map()
                                         : circular_map(k, asym_group > 0 ? static_cast<int>(asym_group) : k);
    return AsymmetricNoise{map, noise_rate};
  }
  return InstanceNoise{noise_rate, static_cast<int>(instance_projections), noise_seed};
}

ThresholdStrategy ExperimentConfig::threshold_strategy(long total_steps) const {
  if (strategy == "fixed") return FixedStrategy{fixed_tau};
  if (strategy == "linear") return LinearStrategy{linear_beta, total_steps};
  if (strategy == "ema") return EmaStrategy{ema_alpha};
  return OptimizedStrategy{epsilon0};
}

}  // namespace ogc
