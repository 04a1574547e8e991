#pragma once

// Run configuration: a flat key/value file with one section per module.
//
//   [channel]
//   rho = 0.5
//   [train]
//   workers = 8
//
// Unknown sections or keys, malformed values and out-of-range values are
// rejected with a ConfigError naming the offending key.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "uavchase/channel.hpp"
#include "uavchase/eval.hpp"
#include "uavchase/net.hpp"
#include "uavchase/trainer.hpp"
#include "uavchase/world.hpp"

namespace uavchase {

struct EvalConfig {
  int episodes = 10000;
  std::vector<double> sweep_f{10, 20, 50, 100};
  std::vector<double> sweep_rho{0.1, 0.5, 0.9};
  std::vector<double> sweep_v{2, 5};
  bool greedy = true;
  int threads = 0;  // 0: hardware concurrency
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string checkpoint;
};

struct Config {
  ChannelParams channel;
  WorldParams world;
  NetShape net;
  TrainConfig train;
  EvalConfig eval;
  RunConfig run;

  EnvSettings env() const { return {channel, world}; }

  TrainSetup train_setup() const { return {env(), net, train, run.seed}; }

  void validate() const;
};

namespace config_detail {

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_shortest(v);
}

inline double parse_double(const std::string& key, const std::string& s) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  double v = 0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || ptr != e) throw ConfigError(key + ": expected a number, got '" + s + "'");
  return v;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& s) {
  Int v = 0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || ptr != e) {
    throw ConfigError(key + ": expected an integer, got '" + s + "'");
  }
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + s + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw ConfigError(key + ": empty list element");
    out.push_back(parse_double(key, item.substr(first, last - first + 1)));
  }
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

inline std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;

  std::string name() const { return section + "." + key; }
};

#define UAVCHASE_DOUBLE(sec, member, path)                                                \
  Field{sec, #member,                                                                     \
        [](Config& c, const std::string& s) { c.path = parse_double(sec "." #member, s); }, \
        [](const Config& c) { return format_double(c.path); }}
#define UAVCHASE_INT(sec, member, path, type)                                                  \
  Field{sec, #member,                                                                          \
        [](Config& c, const std::string& s) { c.path = parse_int<type>(sec "." #member, s); }, \
        [](const Config& c) { return std::to_string(c.path); }}
#define UAVCHASE_BOOL(sec, member, path)                                                \
  Field{sec, #member,                                                                   \
        [](Config& c, const std::string& s) { c.path = parse_bool(sec "." #member, s); }, \
        [](const Config& c) { return std::string(c.path ? "true" : "false"); }}
#define UAVCHASE_LIST(sec, member, path)                                                \
  Field{sec, #member,                                                                   \
        [](Config& c, const std::string& s) { c.path = parse_list(sec "." #member, s); }, \
        [](const Config& c) { return format_list(c.path); }}

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      UAVCHASE_DOUBLE("channel", p_tx, channel.p_tx),
      UAVCHASE_DOUBLE("channel", d0, channel.d0),
      UAVCHASE_DOUBLE("channel", l0, channel.l0),
      UAVCHASE_DOUBLE("channel", path_exp, channel.path_exp),
      UAVCHASE_DOUBLE("channel", k_factor, channel.k_factor),
      UAVCHASE_DOUBLE("channel", doppler_hz, channel.doppler_hz),
      UAVCHASE_DOUBLE("channel", rho, channel.rho),
      UAVCHASE_DOUBLE("channel", sample_hz, channel.sample_hz),
      UAVCHASE_DOUBLE("channel", carrier_hz, channel.carrier_hz),
      UAVCHASE_INT("world", obs_len, world.obs_len, int),
      UAVCHASE_DOUBLE("world", initial_radius, world.initial_radius),
      UAVCHASE_DOUBLE("world", success_radius, world.success_radius),
      UAVCHASE_INT("world", max_steps, world.max_steps, int),
      UAVCHASE_DOUBLE("world", initial_spacing, world.initial_spacing),
      UAVCHASE_DOUBLE("world", tracker_speed, world.tracker_speed),
      UAVCHASE_BOOL("world", freeze_during_travel, world.freeze_during_travel),
      UAVCHASE_INT("net", lstm_layers, net.lstm_layers, int),
      UAVCHASE_INT("net", hidden, net.hidden, int),
      UAVCHASE_INT("net", dense_layers, net.dense_layers, int),
      UAVCHASE_INT("net", dense_width, net.dense_width, int),
      UAVCHASE_INT("train", workers, train.workers, int),
      UAVCHASE_INT("train", update_interval, train.update_interval, int),
      UAVCHASE_DOUBLE("train", gamma, train.gamma),
      UAVCHASE_DOUBLE("train", beta, train.beta),
      UAVCHASE_DOUBLE("train", lr, train.lr),
      UAVCHASE_DOUBLE("train", grad_clip, train.grad_clip),
      UAVCHASE_INT("train", episodes, train.episodes, long),
      Field{"train", "value_loss",
            [](Config& c, const std::string& s) {
              if (s == "nstep") {
                c.train.value_loss = ValueLoss::nstep;
              } else if (s == "td0") {
                c.train.value_loss = ValueLoss::td0;
              } else {
                throw ConfigError("train.value_loss: expected 'nstep' or 'td0', got '" + s + "'");
              }
            },
            [](const Config& c) {
              return std::string(c.train.value_loss == ValueLoss::td0 ? "td0" : "nstep");
            }},
      UAVCHASE_BOOL("train", evaluator, train.evaluator),
      UAVCHASE_INT("train", eval_period, train.eval_period, long),
      UAVCHASE_INT("train", eval_window, train.eval_window, int),
      UAVCHASE_DOUBLE("train", early_stop_threshold, train.early_stop_threshold),
      UAVCHASE_DOUBLE("train", max_wall_s, train.max_wall_s),
      UAVCHASE_INT("eval", episodes, eval.episodes, int),
      UAVCHASE_LIST("eval", sweep_f, eval.sweep_f),
      UAVCHASE_LIST("eval", sweep_rho, eval.sweep_rho),
      UAVCHASE_LIST("eval", sweep_v, eval.sweep_v),
      UAVCHASE_BOOL("eval", greedy_eval, eval.greedy),
      UAVCHASE_INT("eval", threads, eval.threads, int),
      UAVCHASE_INT("run", seed, run.seed, std::uint64_t),
      Field{"run", "out_dir", [](Config& c, const std::string& s) { c.run.out_dir = s; },
            [](const Config& c) { return c.run.out_dir; }},
      Field{"run", "checkpoint", [](Config& c, const std::string& s) { c.run.checkpoint = s; },
            [](const Config& c) { return c.run.checkpoint; }},
  };
  return table;
}

#undef UAVCHASE_DOUBLE
#undef UAVCHASE_INT
#undef UAVCHASE_BOOL
#undef UAVCHASE_LIST

inline const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& f : fields()) {
    if (f.section == section && f.key == key) return &f;
  }
  return nullptr;
}

}  // namespace config_detail

inline void Config::validate() const {
  auto check = [](const char* key, bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string(key) + ": " + what);
  };
  check("channel.d0", channel.d0 > 0, "must be > 0");
  check("channel.sample_hz", channel.sample_hz > 0, "must be > 0");
  check("channel.k_factor", channel.k_factor >= 0, "must be >= 0");
  check("channel.path_exp", channel.path_exp > 0, "must be > 0");
  check("channel.doppler_hz", channel.doppler_hz >= 0, "must be >= 0");
  check("channel.carrier_hz", channel.carrier_hz > 0, "must be > 0");
  check("channel.rho", channel.rho >= 0 && channel.rho < 1, "must lie in [0, 1)");
  check("world.obs_len", world.obs_len >= 1, "must be >= 1");
  check("world.initial_radius", world.initial_radius > 0, "must be > 0");
  check("world.success_radius", world.success_radius >= 0, "must be >= 0");
  check("world.max_steps", world.max_steps >= 1, "must be >= 1");
  check("world.initial_spacing", world.initial_spacing > 0, "must be > 0");
  check("world.tracker_speed", world.tracker_speed > 0, "must be > 0");
  check("net.lstm_layers", net.lstm_layers >= 1, "must be >= 1");
  check("net.hidden", net.hidden >= 1, "must be >= 1");
  check("net.dense_layers", net.dense_layers >= 0, "must be >= 0");
  check("net.dense_width", net.dense_width >= 1, "must be >= 1");
  check("train.workers", train.workers >= 1, "must be >= 1");
  check("train.update_interval", train.update_interval >= 1, "must be >= 1");
  check("train.gamma", train.gamma > 0 && train.gamma <= 1, "must lie in (0, 1]");
  check("train.beta", train.beta >= 0, "must be >= 0");
  check("train.lr", train.lr > 0, "must be > 0");
  check("train.grad_clip", train.grad_clip >= 0, "must be >= 0");
  check("train.episodes", train.episodes >= 0, "must be >= 0");
  check("train.eval_period", train.eval_period >= 1, "must be >= 1");
  check("train.eval_window", train.eval_window >= 1, "must be >= 1");
  check("train.max_wall_s", train.max_wall_s >= 0, "must be >= 0");
  check("eval.episodes", eval.episodes >= 0, "must be >= 0");
  check("eval.threads", eval.threads >= 0, "must be >= 0");
  for (double f : eval.sweep_f) check("eval.sweep_f", f > 0, "values must be > 0");
  for (double r : eval.sweep_rho) check("eval.sweep_rho", r >= 0 && r < 1, "values must lie in [0, 1)");
  for (double v : eval.sweep_v) check("eval.sweep_v", v > 0, "values must be > 0");
}

// Sets "section.key" from its textual value.
inline void set_config_value(Config& cfg, const std::string& dotted, const std::string& value) {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos) throw ConfigError(dotted + ": expected section.key");
  const auto* f = config_detail::find_field(dotted.substr(0, dot), dotted.substr(dot + 1));
  if (f == nullptr) throw ConfigError(dotted + ": unknown key");
  f->set(cfg, value);
}

inline std::string get_config_value(const Config& cfg, const std::string& dotted) {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos) throw ConfigError(dotted + ": expected section.key");
  const auto* f = config_detail::find_field(dotted.substr(0, dot), dotted.substr(dot + 1));
  if (f == nullptr) throw ConfigError(dotted + ": unknown key");
  return f->get(cfg);
}

inline void apply_ptree(Config& cfg, const boost::property_tree::ptree& tree) {
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(section + ": key outside of a [section]");
    }
    for (const auto& [key, value] : body) {
      const auto* f = config_detail::find_field(section, key);
      if (f == nullptr) throw ConfigError(section + "." + key + ": unknown key");
      f->set(cfg, value.get_value<std::string>());
    }
  }
}

inline Config parse_config_stream(std::istream& in, Config cfg = {}) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  apply_ptree(cfg, tree);
  cfg.validate();
  return cfg;
}

inline Config parse_config_string(const std::string& text, Config cfg = {}) {
  std::istringstream in(text);
  return parse_config_stream(in, std::move(cfg));
}

inline Config parse_config_file(const std::string& path, Config cfg = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  return parse_config_stream(in, std::move(cfg));
}

inline std::string to_ini(const Config& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& f : config_detail::fields()) {
    if (f.section != section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    os << f.key << " = " << f.get(cfg) << '\n';
  }
  return os.str();
}

inline bool operator==(const Config& a, const Config& b) { return to_ini(a) == to_ini(b); }

}  // namespace uavchase
