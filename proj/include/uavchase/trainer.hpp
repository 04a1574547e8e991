#pragma once

// Asynchronous advantage actor-critic. N workers roll T-step segments against
// a snapshot of the global networks and ship gradients; the global store
// applies them one batch at a time with Adam. An evaluator thread measures
// greedy success periodically and can stop training early.

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>
#include <vector>

#include "uavchase/adam.hpp"
#include "uavchase/checkpoint.hpp"
#include "uavchase/eval.hpp"
#include "uavchase/losses.hpp"
#include "uavchase/rollout.hpp"

namespace uavchase {

struct TrainConfig {
  int workers = 8;
  int update_interval = 5;  // T
  double gamma = 0.99;
  double beta = 0.01;
  double lr = 1e-5;
  double grad_clip = 40.0;
  long episodes = 10000;
  ValueLoss value_loss = ValueLoss::nstep;
  bool evaluator = true;
  long eval_period = 200;
  int eval_window = 100;
  double early_stop_threshold = 0.95;
  double max_wall_s = 0.0;  // 0: no time budget

  void validate() const {
    if (workers < 1) throw std::domain_error("train.workers must be >= 1");
    if (update_interval < 1) throw std::domain_error("train.update_interval must be >= 1");
    if (!(gamma > 0 && gamma <= 1)) throw std::domain_error("train.gamma must lie in (0, 1]");
    if (!(beta >= 0)) throw std::domain_error("train.beta must be >= 0");
    if (!(lr > 0)) throw std::domain_error("train.lr must be > 0");
    if (episodes < 0) throw std::domain_error("train.episodes must be >= 0");
    if (eval_period < 1) throw std::domain_error("train.eval_period must be >= 1");
    if (eval_window < 1) throw std::domain_error("train.eval_window must be >= 1");
    if (!(max_wall_s >= 0)) throw std::domain_error("train.max_wall_s must be >= 0");
  }

  LossConfig loss() const { return {gamma, beta, value_loss}; }
};

struct Snapshot {
  std::uint64_t version = 0;
  NetworkQuad nets;
};

using GradientQuad = std::array<ParamSet<float>, 4>;

struct UpdateLogEntry {
  std::uint64_t version;
  int worker;
  std::array<double, 4> grad_norm;  // before clipping
};

class GlobalStore {
 public:
  GlobalStore(NetworkQuad init, AdamHyper hyper, double grad_clip)
      : params_(std::move(init)), grad_clip_(grad_clip) {
    for (int n = 0; n < 4; ++n) opt_[n] = OptimizerState<float>::for_shape(params_[n].shape, hyper);
    publish();
  }

  // Latest fully applied parameters; never blocks on an in-flight update.
  std::shared_ptr<const Snapshot> snapshot() const {
    std::lock_guard lk(snapshot_mu_);
    return snapshot_;
  }

  // Applies one gradient batch (one Adam step per network). Batches are
  // serialized; stale gradients are accepted. A batch with any non-finite
  // entry is rejected and leaves the version unchanged.
  std::optional<std::uint64_t> apply(GradientQuad grads, int worker = -1) {
    std::lock_guard lk(apply_mu_);
    for (int n = 0; n < 4; ++n) {
      if (!grads[n].same_layout(params_[n])) throw ShapeError("gradient batch shape mismatch");
    }
    for (const auto& g : grads) {
      if (!g.all_finite()) {
        ++rejected_;
        std::clog << "uavchase: rejected non-finite gradient batch from worker " << worker << '\n';
        return std::nullopt;
      }
    }
    UpdateLogEntry entry{version_ + 1, worker, {}};
    for (int n = 0; n < 4; ++n) {
      entry.grad_norm[n] = clip_global_norm(grads[n], grad_clip_);
      adam_apply(opt_[n], params_[n], grads[n]);
    }
    ++version_;
    log_.push_back(entry);
    publish();
    return version_;
  }

  std::uint64_t version() const {
    std::lock_guard lk(apply_mu_);
    return version_;
  }
  std::uint64_t rejected() const {
    std::lock_guard lk(apply_mu_);
    return rejected_;
  }
  std::vector<UpdateLogEntry> update_log() const {
    std::lock_guard lk(apply_mu_);
    return log_;
  }
  const std::array<OptimizerState<float>, 4>& optimizers() const { return opt_; }

  void shutdown() { shutdown_ = true; }
  bool is_shutdown() const { return shutdown_; }

 private:
  void publish() {
    auto snap = std::make_shared<Snapshot>(Snapshot{version_, params_});
    std::lock_guard lk(snapshot_mu_);
    snapshot_ = std::move(snap);
  }

  mutable std::mutex apply_mu_;
  mutable std::mutex snapshot_mu_;
  NetworkQuad params_;
  std::array<OptimizerState<float>, 4> opt_;
  double grad_clip_;
  std::uint64_t version_ = 0;
  std::uint64_t rejected_ = 0;
  std::vector<UpdateLogEntry> log_;
  std::shared_ptr<const Snapshot> snapshot_;
  std::atomic<bool> shutdown_{false};
};

struct BatchReport {
  int worker = 0;
  long episode = 0;
  int length = 0;
  bool terminal = false;
  std::array<LossBreakdown, 4> loss;
  std::optional<std::uint64_t> version;
};

struct EpisodeStats {
  double wall_s = 0.0;
  long episode = 0;
  int worker = 0;
  std::array<double, 4> reward_sum{};
  std::array<LossBreakdown, 4> mean_loss{};
  int batches = 0;
  int movements = 0;
  bool success = false;
  std::uint64_t version = 0;
};

struct EvalReport {
  long completed_episodes = 0;
  std::uint64_t version = 0;
  double success_rate = 0.0;
  bool stop = false;
};

struct TrainHooks {
  std::function<void(const BatchReport&)> on_batch;
  std::function<void(const EpisodeStats&)> on_episode;
  std::function<void(const EvalReport&)> on_eval;
  // Replaces the greedy network policy used by the evaluator (test hook).
  std::optional<PolicyFn> eval_policy;
};

struct TrainSetup {
  EnvSettings env;
  NetShape shape;
  TrainConfig train;
  std::uint64_t seed = 0;
};

inline NetworkQuad init_networks(const NetShape& shape, std::uint64_t seed) {
  NetworkQuad nets;
  for (int n = 0; n < 4; ++n) {
    nets[n] = init_params<float>(shape, substream_seed(seed, std::string("init-") + kDimNames[n]));
  }
  return nets;
}

// Serializes evaluation requests from workers onto the evaluator thread.
class EvalQueue {
 public:
  std::uint64_t request(long completed, std::shared_ptr<const Snapshot> snap) {
    std::lock_guard lk(mu_);
    pending_.push_back({++issued_, completed, std::move(snap)});
    cv_.notify_all();
    return issued_;
  }

  void wait(std::uint64_t ticket) {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return handled_ >= ticket || closed_; });
  }

  struct Job {
    std::uint64_t ticket;
    long completed;
    std::shared_ptr<const Snapshot> snap;
  };

  std::optional<Job> next() {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return !pending_.empty() || closed_; });
    if (closed_) return std::nullopt;
    Job j = std::move(pending_.front());
    pending_.pop_front();
    return j;
  }

  void done(std::uint64_t ticket) {
    std::lock_guard lk(mu_);
    handled_ = ticket;
    cv_.notify_all();
  }

  void close() {
    std::lock_guard lk(mu_);
    closed_ = true;
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Job> pending_;
  std::uint64_t issued_ = 0;
  std::uint64_t handled_ = 0;
  bool closed_ = false;
};

struct TrainControl {
  std::atomic<long> next_episode{0};
  std::atomic<long> completed{0};
  std::atomic<bool> stop{false};
  EvalQueue evals;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

// One worker agent: episodes of T-step segments, a gradient batch per segment.
inline void worker_loop(int worker_id, GlobalStore& store, const TrainSetup& setup,
                        TrainControl& control, const TrainHooks& hooks) {
  const auto& cfg = setup.train;
  const auto loss_cfg = cfg.loss();
  Rng rng(substream_seed(setup.seed, "worker", static_cast<std::uint64_t>(worker_id)));
  Environment env(setup.env.channel, setup.env.world);

  struct Step {
    std::array<ForwardResult<float>, 4> fwd;
    std::array<int, 4> action{};
    std::array<double, 4> reward{};
  };

  while (!control.stop && !store.is_shutdown()) {
    if (cfg.max_wall_s > 0 && control.elapsed() >= cfg.max_wall_s) break;
    const long episode = control.next_episode++;
    if (episode >= cfg.episodes) break;

    EpisodeStats stats;
    stats.episode = episode;
    stats.worker = worker_id;
    Observation obs = env.reset(rng());
    bool aborted = false;

    while (!env.done()) {
      if (store.is_shutdown()) {
        aborted = true;
        break;
      }
      const auto snap = store.snapshot();  // synchronize local networks
      std::vector<Step> segment;
      segment.reserve(static_cast<std::size_t>(cfg.update_interval));
      for (int t = 0; t < cfg.update_interval && !env.done(); ++t) {
        Step s;
        for (int n = 0; n < 4; ++n) {
          s.fwd[n] = forward(snap->nets[n], obs);
          s.action[n] = sample_action(s.fwd[n].policy, rng);
        }
        auto out = env.step(ActionVector::from_indices(s.action));
        s.reward = out.rewards;
        for (int n = 0; n < 4; ++n) stats.reward_sum[n] += out.rewards[n];
        ++stats.movements;
        obs = std::move(out.next);
        segment.push_back(std::move(s));
      }

      const bool terminal = env.done();
      BatchReport report;
      report.worker = worker_id;
      report.episode = episode;
      report.length = static_cast<int>(segment.size());
      report.terminal = terminal;
      GradientQuad grads;
      for (int n = 0; n < 4; ++n) {
        const auto& net = snap->nets[n];
        double bootstrap = 0.0;
        if (!terminal) bootstrap = static_cast<double>(forward(net, obs).value);
        std::vector<NetStep<float>> steps;
        for (const auto& s : segment) steps.push_back({&s.fwd[n], s.action[n], s.reward[n]});
        grads[n] = ParamSet<float>::zeros(net.shape);
        report.loss[n] = network_loss<float>(net, steps, bootstrap, terminal, loss_cfg, &grads[n]);
        stats.mean_loss[n].policy += report.loss[n].policy;
        stats.mean_loss[n].value += report.loss[n].value;
        stats.mean_loss[n].entropy += report.loss[n].entropy;
        stats.mean_loss[n].total += report.loss[n].total;
      }
      report.version = store.apply(std::move(grads), worker_id);
      ++stats.batches;
      if (hooks.on_batch) hooks.on_batch(report);
    }
    if (aborted) break;

    if (stats.batches > 0) {
      for (auto& l : stats.mean_loss) {
        l.policy /= stats.batches;
        l.value /= stats.batches;
        l.entropy /= stats.batches;
        l.total /= stats.batches;
      }
    }
    stats.success = env.success();
    stats.version = store.version();
    stats.wall_s = control.elapsed();
    if (hooks.on_episode) hooks.on_episode(stats);

    const long completed = ++control.completed;
    if (cfg.evaluator && completed % cfg.eval_period == 0) {
      const auto ticket = control.evals.request(completed, store.snapshot());
      // With one worker the episode sequence stays reproducible only if the
      // stop decision lands before the next episode starts.
      if (cfg.workers == 1) control.evals.wait(ticket);
    }
  }
}

// Auxiliary evaluation agent: greedy batch of eval_window episodes per request.
inline void evaluator_loop(const TrainSetup& setup, TrainControl& control,
                           const TrainHooks& hooks) {
  const auto& cfg = setup.train;
  std::uint64_t index = 0;
  while (auto job = control.evals.next()) {
    const PolicyFn policy =
        hooks.eval_policy ? *hooks.eval_policy
                          : network_policy(std::shared_ptr<const NetworkQuad>(job->snap, &job->snap->nets),
                                           /*greedy=*/true);
    const auto records = run_episodes(policy, cfg.eval_window, setup.env,
                                      substream_seed(setup.seed, "evaluator", index++), 1);
    const auto successes = successful_movements(records).size();
    EvalReport rep;
    rep.completed_episodes = job->completed;
    rep.version = job->snap->version;
    rep.success_rate = static_cast<double>(successes) / static_cast<double>(records.size());
    rep.stop = rep.success_rate >= cfg.early_stop_threshold;
    if (rep.stop) control.stop = true;
    if (hooks.on_eval) hooks.on_eval(rep);
    control.evals.done(job->ticket);
  }
}

struct TrainResult {
  long episodes_completed = 0;
  std::uint64_t version = 0;
  std::uint64_t rejected = 0;
  bool stopped_early = false;
  std::vector<EvalReport> evaluations;
  NetworkQuad nets;
};

inline TrainResult train(const TrainSetup& setup, TrainHooks hooks = {},
                         std::optional<NetworkQuad> init = std::nullopt) {
  setup.env.channel.validate();
  setup.env.world.validate();
  setup.shape.validate();
  setup.train.validate();

  AdamHyper hyper;
  hyper.lr = setup.train.lr;
  GlobalStore store(init ? std::move(*init) : init_networks(setup.shape, setup.seed), hyper,
                    setup.train.grad_clip);
  TrainControl control;
  TrainResult result;
  std::mutex eval_mu;
  auto user_on_eval = hooks.on_eval;
  hooks.on_eval = [&](const EvalReport& r) {
    {
      std::lock_guard lk(eval_mu);
      result.evaluations.push_back(r);
    }
    if (user_on_eval) user_on_eval(r);
  };

  std::thread evaluator;
  if (setup.train.evaluator) {
    evaluator = std::thread([&] { evaluator_loop(setup, control, hooks); });
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(setup.train.workers));
  std::vector<std::thread> workers;
  for (int w = 0; w < setup.train.workers; ++w) {
    workers.emplace_back([&, w] {
      try {
        worker_loop(w, store, setup, control, hooks);
      } catch (...) {
        errors[w] = std::current_exception();
        store.shutdown();
      }
    });
  }
  for (auto& t : workers) t.join();
  control.evals.close();
  if (evaluator.joinable()) evaluator.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  result.episodes_completed = control.completed;
  result.version = store.version();
  result.rejected = store.rejected();
  result.stopped_early = control.stop;
  result.nets = store.snapshot()->nets;
  return result;
}

inline constexpr const char* kMetricsCsvHeader =
    "wall_s,episode,worker,net,loss_p,loss_v,entropy,ep_reward_d,ep_reward_x,ep_reward_y,"
    "ep_reward_z,movements,success,version";

// One row per finished episode. The loss columns hold the per-batch mean
// averaged over the four networks; net is therefore "mean".
inline void write_metrics_row(std::ostream& os, const EpisodeStats& s) {
  double lp = 0, lv = 0, h = 0;
  for (const auto& l : s.mean_loss) {
    lp += l.policy / 4;
    lv += l.value / 4;
    h += l.entropy / 4;
  }
  os << std::setprecision(10) << s.wall_s << ',' << s.episode << ',' << s.worker << ",mean," << lp
     << ',' << lv << ',' << h << ',' << s.reward_sum[0] << ',' << s.reward_sum[1] << ','
     << s.reward_sum[2] << ',' << s.reward_sum[3] << ',' << s.movements << ','
     << (s.success ? 1 : 0) << ',' << s.version << '\n';
}

}  // namespace uavchase
