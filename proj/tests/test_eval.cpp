#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "uavchase/config.hpp"
#include "uavchase/eval.hpp"

using namespace uavchase;

namespace {

EnvSettings fast_settings() {
  EnvSettings s;
  s.channel.k_factor = std::numeric_limits<double>::infinity();
  s.world.obs_len = 2;
  s.world.initial_radius = 20.0;
  return s;
}

EpisodeRecord record(int m, bool ok, double each = 1.0) {
  EpisodeRecord r;
  r.movements = m;
  r.success = ok;
  r.travel.assign(static_cast<std::size_t>(m), each);
  return r;
}

}  // namespace

TEST(RunEpisodes, ZeroCountIsEmpty) {
  EXPECT_TRUE(run_episodes(uniform_policy(), 0, fast_settings(), 1).empty());
  EXPECT_THROW(run_episodes(uniform_policy(), -1, fast_settings(), 1), std::invalid_argument);
}

TEST(RunEpisodes, OracleAlwaysSucceedsWithinTheExpectedMoveCount) {
  const auto recs = run_episodes(oracle_policy(), 50, fast_settings(), 3, 2);
  for (const auto& r : recs) {
    EXPECT_TRUE(r.success);
    // Each axis closes 4 m per move while more than 3 m off and then lands
    // within 1 m, so the distance falls below sqrt(3) m within 6 moves.
    EXPECT_LE(r.movements, 6);
    EXPECT_EQ(r.travel.size(), static_cast<std::size_t>(r.movements));
  }
}

TEST(RunEpisodes, ResultsIndependentOfThreadCount) {
  const auto a = run_episodes(uniform_policy(), 12, fast_settings(), 9, 1);
  const auto b = run_episodes(uniform_policy(), 12, fast_settings(), 9, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].movements, b[i].movements);
    EXPECT_EQ(a[i].travel, b[i].travel);
    EXPECT_EQ(a[i].success, b[i].success);
  }
}

TEST(RunEpisodes, RecordsCarryConditions) {
  auto s = fast_settings();
  s.channel.sample_hz = 20;
  s.channel.rho = 0.9;
  s.world.tracker_speed = 5;
  const auto r = run_episodes(oracle_policy(), 1, s, 0)[0];
  EXPECT_EQ(r.sample_hz, 20);
  EXPECT_EQ(r.rho, 0.9);
  EXPECT_EQ(r.speed, 5);
}

TEST(Cdf, SmallExample) {
  const auto c = cdf(std::vector<int>{3, 1, 2});
  const std::vector<CdfPoint> expected{{1, 1.0 / 3}, {2, 2.0 / 3}, {3, 1.0}};
  ASSERT_EQ(c.size(), expected.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(c[i].movements, expected[i].movements);
    EXPECT_NEAR(c[i].fraction, expected[i].fraction, 1e-15);
  }
}

TEST(Cdf, IdenticalValuesGiveASingleStep) {
  const auto c = cdf(std::vector<int>{4, 4, 4, 4});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0], (CdfPoint{4, 1.0}));
}

TEST(Cdf, MonotoneOnRandomInputs) {
  Rng rng(1);
  std::uniform_int_distribution<int> len(1, 200), val(1, 500);
  for (int i = 0; i < 500; ++i) {
    std::vector<int> v(len(rng));
    for (auto& x : v) x = val(rng);
    const auto c = cdf(v);
    for (std::size_t k = 1; k < c.size(); ++k) {
      ASSERT_GT(c[k].movements, c[k - 1].movements);
      ASSERT_GT(c[k].fraction, c[k - 1].fraction);
    }
    ASSERT_EQ(c.back().fraction, 1.0);
  }
}

TEST(Cdf, FailuresAreExcludedAndAllFailuresGiveNothing) {
  const std::vector<EpisodeRecord> recs{record(5, true), record(500, false), record(7, true)};
  const auto c = cdf(recs);
  ASSERT_TRUE(c.has_value());
  EXPECT_EQ(c->back().movements, 7);
  EXPECT_FALSE(cdf(std::vector<EpisodeRecord>{record(500, false)}).has_value());
}

TEST(Percentile, Examples) {
  std::vector<int> v(10);
  std::iota(v.begin(), v.end(), 1);
  EXPECT_EQ(percentile(v, 90), 9);
  EXPECT_EQ(percentile(v, 50), 5);
  EXPECT_EQ(percentile(v, 100), 10);
  EXPECT_EQ(percentile(std::vector<int>{42}, 90), 42);
}

TEST(Percentile, Errors) {
  EXPECT_THROW(percentile(std::vector<int>{}, 50), std::invalid_argument);
  EXPECT_THROW(percentile(std::vector<int>{1}, 0), std::domain_error);
  EXPECT_THROW(percentile(std::vector<int>{1}, 101), std::domain_error);
  EXPECT_THROW(percentile(std::vector<EpisodeRecord>{record(500, false)}, 50),
               std::invalid_argument);
}

TEST(Percentile, AgreesWithCountingOracleAndIsMonotone) {
  Rng rng(2);
  std::uniform_int_distribution<int> len(1, 60), val(1, 100);
  std::uniform_real_distribution<double> pct(0.5, 100.0);
  for (int i = 0; i < 2000; ++i) {
    std::vector<int> v(len(rng));
    for (auto& x : v) x = val(rng);
    double p1 = pct(rng), p2 = pct(rng);
    if (p1 > p2) std::swap(p1, p2);
    ASSERT_EQ(percentile(v, p1), oracle::percentile_by_count(v, p1));
    ASSERT_LE(percentile(v, p1), percentile(v, p2));
  }
}

TEST(TrackingTime, HandComputedValues) {
  EXPECT_EQ(tracking_time(10, 100.0, 50, 10.0, 2.0), 100.0);
  EXPECT_EQ(tracking_time(0, 0.0, 50, 10.0, 2.0), 0.0);
  EXPECT_EQ(tracking_time(44, 0.0, 50, 10.0, 2.0), 220.0);
  EXPECT_EQ(tracking_time(10, 100.0, 50, 100.0, 5.0), 25.0);
}

TEST(TrackingTime, DoublingSpeedHalvesTravelTerm) {
  const double obs = 10 * 50 / 10.0;
  const double t1 = tracking_time(10, 100.0, 50, 10.0, 2.0) - obs;
  const double t2 = tracking_time(10, 100.0, 50, 10.0, 4.0) - obs;
  EXPECT_DOUBLE_EQ(t2, t1 / 2);
}

TEST(TrackingTime, StrictlyDecreasingInSpeedAndFrequency) {
  Rng rng(3);
  std::uniform_int_distribution<int> mv(1, 500);
  std::uniform_real_distribution<double> dist(1.0, 2000.0), f(1.0, 200.0), v(0.1, 20.0);
  for (int i = 0; i < 10000; ++i) {
    const int m = mv(rng);
    const double d = dist(rng);
    double f1 = f(rng), f2 = f(rng), v1 = v(rng), v2 = v(rng);
    if (f1 == f2 || v1 == v2) continue;
    if (f1 > f2) std::swap(f1, f2);
    if (v1 > v2) std::swap(v1, v2);
    ASSERT_GT(tracking_time(m, d, 50, f1, v1), tracking_time(m, d, 50, f2, v1));
    ASSERT_GT(tracking_time(m, d, 50, f1, v1), tracking_time(m, d, 50, f1, v2));
    ASSERT_NEAR(tracking_time(m, d, 50, f1, v1), oracle::tracking_time(m, 50, f1, d, v1), 1e-9);
  }
}

TEST(TrackingTime, RejectsNonPositiveRates) {
  EXPECT_THROW(tracking_time(1, 1.0, 50, 0.0, 2.0), std::domain_error);
  EXPECT_THROW(tracking_time(1, 1.0, 50, 10.0, 0.0), std::domain_error);
}

TEST(Summary, AggregatesSuccessfulEpisodes) {
  const std::vector<EpisodeRecord> recs{record(10, true, 10.0), record(20, true, 5.0),
                                        record(500, false)};
  const auto row = summarize(recs, 10.0, 0.5, 2.0, 50);
  EXPECT_NEAR(row.success_rate, 2.0 / 3, 1e-15);
  EXPECT_EQ(row.p50, 10);
  EXPECT_EQ(row.p90, 20);
  // tau: 10*5 + 100/2 = 100 and 20*5 + 100/2 = 150.
  EXPECT_NEAR(*row.mean_tau, 125.0, 1e-12);
  std::ostringstream os;
  write_summary_row(os, row);
  EXPECT_EQ(os.str().substr(0, 9), "10,0.5,2,");
}

TEST(Summary, NoSuccessLeavesMetricsEmpty) {
  const auto row = summarize({record(500, false)}, 10.0, 0.5, 2.0, 50);
  EXPECT_EQ(row.success_rate, 0.0);
  EXPECT_FALSE(row.p90.has_value());
  std::ostringstream os;
  write_summary_row(os, row);
  EXPECT_EQ(os.str(), "10,0.5,2,1,0,,,\n");
}

TEST(Sweep, DefaultGridCoversAllConditions) {
  const Config cfg;
  EXPECT_EQ(cfg.eval.sweep_f, (std::vector<double>{10, 20, 50, 100}));
  EXPECT_EQ(cfg.eval.sweep_rho, (std::vector<double>{0.1, 0.5, 0.9}));
  EXPECT_EQ(cfg.eval.sweep_v, (std::vector<double>{2, 5}));
  EXPECT_EQ(cfg.eval.episodes, 10000);
}
