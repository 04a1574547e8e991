#pragma once

// Command layer behind the `uavchase` executable: train, eval, channel-probe
// and report.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uavchase/checkpoint.hpp"
#include "uavchase/config.hpp"
#include "uavchase/eval.hpp"
#include "uavchase/trainer.hpp"

namespace uavchase {

inline constexpr int kRunJsonVersion = 1;
inline constexpr int kCsvFormatVersion = 1;

struct CliOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  std::optional<std::string> checkpoint;
  std::optional<long> episodes;
  std::optional<std::string> sweep_f;
  std::optional<std::string> sweep_rho;
  bool greedy = false;
  bool stochastic = false;
};

inline Config load_run_json(const std::string& path, Config cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  if (!doc.contains("config") || !doc["config"].is_object()) {
    throw ConfigError("config: " + path + " has no 'config' object");
  }
  for (const auto& [section, body] : doc["config"].items()) {
    if (!body.is_object()) throw ConfigError(section + ": expected an object");
    for (const auto& [key, value] : body.items()) {
      if (!value.is_string()) throw ConfigError(section + "." + key + ": expected a string value");
      set_config_value(cfg, section + "." + key, value.get<std::string>());
    }
  }
  cfg.validate();
  return cfg;
}

// Defaults < UAVCHASE_SEED < config file < command-line flags.
inline Config resolve_config(const CliOverrides& o, const char* env_seed) {
  Config cfg;
  if (env_seed != nullptr && *env_seed != '\0') {
    set_config_value(cfg, "run.seed", env_seed);
  }
  if (!o.config_path.empty()) {
    const bool json = std::filesystem::path(o.config_path).extension() == ".json";
    cfg = json ? load_run_json(o.config_path, cfg) : parse_config_file(o.config_path, cfg);
  }
  if (o.seed) cfg.run.seed = *o.seed;
  if (o.workers) cfg.train.workers = *o.workers;
  if (o.out_dir) cfg.run.out_dir = *o.out_dir;
  if (o.checkpoint) cfg.run.checkpoint = *o.checkpoint;
  if (o.episodes) {
    cfg.train.episodes = *o.episodes;
    cfg.eval.episodes = static_cast<int>(*o.episodes);
  }
  if (o.sweep_f) set_config_value(cfg, "eval.sweep_f", *o.sweep_f);
  if (o.sweep_rho) set_config_value(cfg, "eval.sweep_rho", *o.sweep_rho);
  if (o.greedy) cfg.eval.greedy = true;
  if (o.stochastic) cfg.eval.greedy = false;
  cfg.validate();
  return cfg;
}

inline nlohmann::json config_json(const Config& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : config_detail::fields()) j[f.section][f.key] = f.get(cfg);
  return j;
}

inline void write_run_json(const std::filesystem::path& dir, const std::string& command,
                           const Config& cfg) {
  nlohmann::json doc;
  doc["tool"] = "uavchase";
  doc["command"] = command;
  doc["seed"] = cfg.run.seed;
  doc["formats"] = {{"run_json", kRunJsonVersion},
                    {"checkpoint", kCheckpointVersion},
                    {"csv", kCsvFormatVersion}};
  doc["config"] = config_json(cfg);
  std::ofstream out(dir / "run.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "run.json").string());
  out << doc.dump(2) << '\n';
}

inline std::filesystem::path prepare_out_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
  const auto probe = p / ".write_probe";
  {
    std::ofstream t(probe);
    if (!t) throw std::runtime_error("output directory is not writable: " + dir);
  }
  std::filesystem::remove(probe, ec);
  return p;
}

inline std::string checkpoint_path(const Config& cfg, const std::filesystem::path& out_dir) {
  return cfg.run.checkpoint.empty() ? (out_dir / "checkpoint.uavc").string() : cfg.run.checkpoint;
}

inline int cmd_train(const Config& cfg, std::ostream& log) {
  const auto dir = prepare_out_dir(cfg.run.out_dir);
  write_run_json(dir, "train", cfg);
  std::ofstream metrics(dir / "metrics.csv");
  if (!metrics) throw std::runtime_error("cannot write metrics.csv");
  metrics << kMetricsCsvHeader << '\n';
  std::mutex mu;
  TrainHooks hooks;
  hooks.on_episode = [&](const EpisodeStats& s) {
    std::lock_guard lk(mu);
    write_metrics_row(metrics, s);
  };
  hooks.on_eval = [&](const EvalReport& r) {
    std::lock_guard lk(mu);
    log << "eval after " << r.completed_episodes << " episodes (version " << r.version
        << "): success rate " << r.success_rate << (r.stop ? " -> stopping" : "") << '\n';
  };
  const auto result = train(cfg.train_setup(), hooks);
  metrics.flush();
  const auto ckpt = checkpoint_path(cfg, dir);
  save_checkpoint(ckpt, result.nets);
  log << "trained " << result.episodes_completed << " episodes, " << result.version
      << " updates" << (result.stopped_early ? " (early stop)" : "") << "; checkpoint " << ckpt
      << '\n';
  return 0;
}

inline int cmd_eval(const Config& cfg, std::ostream& log, const std::string& trace_path = {}) {
  if (cfg.run.checkpoint.empty()) throw std::runtime_error("eval: no checkpoint given (--checkpoint)");
  if (!std::filesystem::exists(cfg.run.checkpoint)) {
    throw std::runtime_error("eval: checkpoint not found: " + cfg.run.checkpoint);
  }
  auto nets = std::make_shared<const NetworkQuad>(load_checkpoint(cfg.run.checkpoint, cfg.net));
  const auto dir = prepare_out_dir(cfg.run.out_dir);
  write_run_json(dir, "eval", cfg);
  std::ofstream eval_csv(dir / "eval.csv");
  std::ofstream summary_csv(dir / "summary.csv");
  if (!eval_csv || !summary_csv) throw std::runtime_error("cannot write eval outputs");
  eval_csv << kEvalCsvHeader << '\n';
  summary_csv << kSummaryCsvHeader << '\n';

  const auto policy = network_policy(nets, cfg.eval.greedy);
  std::uint64_t point = 0;
  for (double f : cfg.eval.sweep_f) {
    for (double rho : cfg.eval.sweep_rho) {
      for (double v : cfg.eval.sweep_v) {
        EnvSettings env = cfg.env();
        env.channel.sample_hz = f;
        env.channel.rho = rho;
        env.world.tracker_speed = v;
        const auto seed = substream_seed(cfg.run.seed, "eval", point);
        if (point == 0 && !trace_path.empty()) {
          std::ofstream trace(trace_path);
          if (!trace) throw std::runtime_error("cannot write trace " + trace_path);
          Environment e(env.channel, env.world);
          Rng rng(substream_seed(seed, "actions", 0));
          run_episode(e, policy, substream_seed(seed, "episode", 0), rng, &trace);
        }
        const auto records = run_episodes(policy, cfg.eval.episodes, env, seed, cfg.eval.threads);
        write_eval_rows(eval_csv, records, env.world.obs_len);
        const auto row = summarize(records, f, rho, v, env.world.obs_len);
        write_summary_row(summary_csv, row);
        log << "F=" << f << " rho=" << rho << " v=" << v << ": success " << row.success_rate;
        if (row.p90) log << ", p90 " << *row.p90;
        if (row.mean_tau) log << ", mean tau " << *row.mean_tau << " s";
        log << '\n';
        ++point;
      }
    }
  }
  return 0;
}

inline int cmd_channel_probe(const Config& cfg, long samples, double distance, std::ostream& out) {
  if (samples < 0) throw std::invalid_argument("channel-probe: negative sample count");
  FadingProcess process(cfg.channel, substream_seed(cfg.run.seed, "channel"));
  std::array<double, kReceivers> distances;
  distances.fill(distance);
  const double dt = 1.0 / cfg.channel.sample_hz;
  out << "time_s,rx,rssi_dbm,gain_re,gain_im\n";
  out << std::setprecision(12);
  for (long i = 0; i < samples; ++i) {
    const auto s = rssi(cfg.channel, process, distances, dt);
    const auto& g = process.gains();
    for (int u = 0; u < kReceivers; ++u) {
      out << s[u].time_s << ',' << u << ',' << s[u].value_dbm << ',' << g[u].real() << ','
          << g[u].imag() << '\n';
    }
  }
  return 0;
}

// Concatenates every summary*.csv below dir into dir/report.csv.
inline int cmd_report(const std::string& dir, std::ostream& out) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("report: not a directory: " + dir);
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("summary", 0) == 0 && e.path().extension() == ".csv") {
      files.push_back(e.path());
    }
  }
  if (files.empty()) throw std::runtime_error("report: no summary*.csv files under " + dir);
  std::sort(files.begin(), files.end());
  std::string table = std::string(kSummaryCsvHeader) + "\n";
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string line;
    if (!std::getline(in, line) || line != kSummaryCsvHeader) {
      throw std::runtime_error("report: " + f.string() + " is not a summary CSV");
    }
    while (std::getline(in, line)) {
      if (!line.empty()) table += line + "\n";
    }
  }
  std::ofstream report(std::filesystem::path(dir) / "report.csv");
  if (!report) throw std::runtime_error("report: cannot write report.csv");
  report << table;
  out << table;
  return 0;
}

// Entry point shared by the executable and the tests. Returns the exit status.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"UAV swarm chasing: channel simulation, A3C training and evaluation"};
  app.require_subcommand(1);
  CliOverrides o;
  long samples = 1000;
  double distance = 100.0;
  std::string trace;
  std::string report_dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "INI config or run.json");
    sub->add_option("--seed", o.seed, "Root seed");
    sub->add_option("--out-dir", o.out_dir, "Output directory");
  };
  auto* train_cmd = app.add_subcommand("train", "Train the four networks");
  add_common(train_cmd);
  train_cmd->add_option("--workers", o.workers, "Number of worker agents");
  train_cmd->add_option("--episodes", o.episodes, "Episode budget");
  train_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint output path");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint over the F/rho/v sweep");
  add_common(eval_cmd);
  eval_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint to evaluate");
  eval_cmd->add_option("--episodes", o.episodes, "Episodes per sweep point");
  eval_cmd->add_option("--sweep-f", o.sweep_f, "Comma-separated sampling frequencies (Hz)");
  eval_cmd->add_option("--sweep-rho", o.sweep_rho, "Comma-separated correlation coefficients");
  eval_cmd->add_option("--workers", o.workers, "Accepted for symmetry with train");
  eval_cmd->add_flag("--greedy", o.greedy, "Greedy action selection (default)");
  eval_cmd->add_flag("--stochastic", o.stochastic, "Sample actions from the policy");
  eval_cmd->add_option("--trace", trace, "Write the per-movement trace of one episode");

  auto* probe_cmd = app.add_subcommand("channel-probe", "Stream simulated RSSI samples as CSV");
  add_common(probe_cmd);
  probe_cmd->add_option("--samples", samples, "Sample instants to emit");
  probe_cmd->add_option("--distance", distance, "Transmitter distance for every receiver (m)");

  auto* report_cmd = app.add_subcommand("report", "Merge summary CSVs below a directory");
  report_cmd->add_option("dir", report_dir, "Directory to scan")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (report_cmd->parsed()) return cmd_report(report_dir, out);
    const Config cfg = resolve_config(o, std::getenv("UAVCHASE_SEED"));
    if (train_cmd->parsed()) return cmd_train(cfg, out);
    if (eval_cmd->parsed()) return cmd_eval(cfg, out, trace);
    if (probe_cmd->parsed()) return cmd_channel_probe(cfg, samples, distance, out);
  } catch (const std::exception& e) {
    err << "uavchase: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace uavchase
