#include <gtest/gtest.h>

#include <mutex>
#include <random>
#include <thread>

#include "uavchase/trainer.hpp"

using namespace uavchase;

namespace {

NetShape tiny() {
  NetShape s;
  s.lstm_layers = 1;
  s.hidden = 8;
  s.dense_layers = 1;
  s.dense_width = 8;
  return s;
}

TrainSetup small_setup(int workers, long episodes) {
  TrainSetup s;
  s.env.channel.k_factor = std::numeric_limits<double>::infinity();
  s.env.world.obs_len = 5;
  s.env.world.initial_radius = 10.0;
  s.env.world.max_steps = 30;
  s.shape = tiny();
  s.train.workers = workers;
  s.train.episodes = episodes;
  s.train.lr = 1e-3;
  s.train.evaluator = false;
  s.seed = 5;
  return s;
}

GradientQuad zero_grads(const NetShape& shape) {
  GradientQuad g;
  for (auto& x : g) x = ParamSet<float>::zeros(shape);
  return g;
}

bool same(const NetworkQuad& a, const NetworkQuad& b) {
  for (int n = 0; n < 4; ++n) {
    for (std::size_t i = 0; i < a[n].tensors.size(); ++i) {
      if (a[n].tensors[i] != b[n].tensors[i]) return false;
    }
  }
  return true;
}

}  // namespace

TEST(Store, ZeroGradientBumpsVersionOnly) {
  GlobalStore store(init_networks(tiny(), 1), {}, 40.0);
  const auto before = store.snapshot();
  EXPECT_EQ(store.apply(zero_grads(tiny())), 1u);
  EXPECT_EQ(store.version(), 1u);
  EXPECT_TRUE(same(before->nets, store.snapshot()->nets));
  EXPECT_EQ(before->version, 0u);
}

TEST(Store, NonFiniteBatchIsRejected) {
  GlobalStore store(init_networks(tiny(), 1), {}, 40.0);
  auto g = zero_grads(tiny());
  g[2].tensors[0](0, 0) = std::numeric_limits<float>::quiet_NaN();
  const auto before = store.snapshot();
  EXPECT_FALSE(store.apply(g).has_value());
  EXPECT_EQ(store.version(), 0u);
  EXPECT_EQ(store.rejected(), 1u);
  EXPECT_TRUE(same(before->nets, store.snapshot()->nets));
}

TEST(Store, ShapeMismatchThrows) {
  GlobalStore store(init_networks(tiny(), 1), {}, 40.0);
  NetShape other = tiny();
  other.hidden = 9;
  EXPECT_THROW(store.apply(zero_grads(other)), ShapeError);
}

TEST(Store, ConcurrentAppliesAreAllCounted) {
  GlobalStore store(init_networks(tiny(), 1), {}, 40.0);
  const int per_thread = 200;
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      Rng rng(t);
      std::normal_distribution<float> n01(0.0f, 1.0f);
      for (int i = 0; i < per_thread; ++i) {
        auto g = zero_grads(tiny());
        for (auto& p : g) {
          for (auto& m : p.tensors) m = m.unaryExpr([&](float) { return n01(rng); });
        }
        store.apply(std::move(g), t);
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(store.version(), 4u * per_thread);
  EXPECT_EQ(store.update_log().size(), 4u * per_thread);
  for (const auto& net : store.snapshot()->nets) EXPECT_TRUE(net.all_finite());
  for (const auto& opt : store.optimizers()) EXPECT_EQ(opt.step, 4u * per_thread);
}

TEST(Store, GradientsAreClippedBeforeTheStep) {
  GlobalStore store(init_networks(tiny(), 1), {}, 1.0);
  auto g = zero_grads(tiny());
  g[0].tensors[0](0, 0) = 300.0f;
  g[0].tensors[0](1, 0) = 400.0f;
  store.apply(g);
  const auto log = store.update_log();
  ASSERT_EQ(log.size(), 1u);
  EXPECT_NEAR(log[0].grad_norm[0], 500.0, 1e-3);
  EXPECT_NEAR(global_norm(store.optimizers()[0].m), 0.1 * 1.0, 1e-6);
}

TEST(Train, SingleWorkerRunIsBitReproducible) {
  auto setup = small_setup(1, 6);
  std::vector<std::array<double, 4>> ra, rb;
  TrainHooks ha, hb;
  ha.on_episode = [&](const EpisodeStats& s) { ra.push_back(s.reward_sum); };
  hb.on_episode = [&](const EpisodeStats& s) { rb.push_back(s.reward_sum); };
  const auto a = train(setup, ha);
  const auto b = train(setup, hb);
  EXPECT_EQ(ra, rb);
  EXPECT_EQ(a.version, b.version);
  EXPECT_TRUE(same(a.nets, b.nets));
  EXPECT_EQ(a.episodes_completed, 6);
  EXPECT_GT(a.version, 0u);
}

TEST(Train, DifferentSeedsDiverge) {
  auto setup = small_setup(1, 3);
  const auto a = train(setup);
  setup.seed = 6;
  const auto b = train(setup);
  EXPECT_FALSE(same(a.nets, b.nets));
}

TEST(Train, SegmentsRespectTheUpdateInterval) {
  auto setup = small_setup(2, 8);
  std::mutex mu;
  std::vector<BatchReport> batches;
  TrainHooks hooks;
  hooks.on_batch = [&](const BatchReport& r) {
    std::lock_guard lk(mu);
    batches.push_back(r);
  };
  const auto result = train(setup, hooks);
  ASSERT_FALSE(batches.empty());
  EXPECT_EQ(result.version + result.rejected, batches.size());
  for (const auto& b : batches) {
    EXPECT_GE(b.length, 1);
    EXPECT_LE(b.length, 5);
    if (b.length < 5) EXPECT_TRUE(b.terminal);
    for (const auto& l : b.loss) {
      EXPECT_NEAR(l.total, l.policy + l.value - setup.train.beta * l.entropy, 1e-9);
    }
  }
}

TEST(Train, ZeroEpisodeBudgetReturnsInitialNetworks) {
  auto setup = small_setup(2, 0);
  const auto r = train(setup);
  EXPECT_EQ(r.version, 0u);
  EXPECT_TRUE(same(r.nets, init_networks(setup.shape, setup.seed)));
}

TEST(Train, ResumesFromGivenNetworks) {
  auto setup = small_setup(1, 0);
  const auto init = init_networks(setup.shape, 999);
  const auto r = train(setup, {}, init);
  EXPECT_TRUE(same(r.nets, init));
}

TEST(Evaluator, ThresholdAboveOneNeverStops) {
  auto setup = small_setup(1, 6);
  setup.train.evaluator = true;
  setup.train.eval_period = 2;
  setup.train.eval_window = 3;
  setup.train.early_stop_threshold = 1.01;
  const auto r = train(setup);
  EXPECT_FALSE(r.stopped_early);
  EXPECT_EQ(r.episodes_completed, 6);
  EXPECT_EQ(r.evaluations.size(), 3u);
}

TEST(Evaluator, ZeroThresholdStopsAtFirstEvaluation) {
  auto setup = small_setup(1, 50);
  setup.train.evaluator = true;
  setup.train.eval_period = 2;
  setup.train.eval_window = 2;
  setup.train.early_stop_threshold = 0.0;
  const auto r = train(setup);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.episodes_completed, 2);
  ASSERT_EQ(r.evaluations.size(), 1u);
  EXPECT_TRUE(r.evaluations[0].stop);
}

TEST(Evaluator, OracleEvaluationPolicyTriggersEarlyStop) {
  auto setup = small_setup(1, 50);
  setup.train.evaluator = true;
  setup.train.eval_period = 3;
  setup.train.eval_window = 10;
  TrainHooks hooks;
  hooks.eval_policy = oracle_policy();
  const auto r = train(setup, hooks);
  ASSERT_FALSE(r.evaluations.empty());
  EXPECT_DOUBLE_EQ(r.evaluations[0].success_rate, 1.0);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.episodes_completed, 3);
}

TEST(Metrics, RowFormat) {
  EpisodeStats s;
  s.wall_s = 1.5;
  s.episode = 7;
  s.worker = 1;
  s.reward_sum = {1, 2, 3, 4};
  for (auto& l : s.mean_loss) l = {0.5, 1.0, 1.6, 0.0};
  s.movements = 12;
  s.success = true;
  s.version = 30;
  std::ostringstream os;
  write_metrics_row(os, s);
  EXPECT_EQ(os.str(), "1.5,7,1,mean,0.5,1,1.6,1,2,3,4,12,1,30\n");
  EXPECT_EQ(std::string(kMetricsCsvHeader),
            "wall_s,episode,worker,net,loss_p,loss_v,entropy,ep_reward_d,ep_reward_x,ep_reward_y,"
            "ep_reward_z,movements,success,version");
}

TEST(Config, ValidationRejectsBadValues) {
  TrainConfig c;
  c.workers = 0;
  EXPECT_THROW(c.validate(), std::domain_error);
  c = TrainConfig{};
  c.gamma = 1.5;
  EXPECT_THROW(c.validate(), std::domain_error);
}

TEST(Train, WallClockBudgetStopsNewEpisodes) {
  auto setup = small_setup(2, 1000);
  setup.train.max_wall_s = 1e-9;
  const auto r = train(setup);
  EXPECT_EQ(r.episodes_completed, 0);
  EXPECT_EQ(r.version, 0u);
}
