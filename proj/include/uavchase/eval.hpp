#pragma once

// Batch evaluation and movement/tracking-time metrics.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "uavchase/rollout.hpp"

namespace uavchase {

// Runs count independent episodes. Episode i uses environment seed
// substream(seed, "episode", i) and its own action stream, so results depend
// only on (seed, i) and not on the thread count.
inline std::vector<EpisodeRecord> run_episodes(const PolicyFn& policy, int count,
                                               const EnvSettings& settings, std::uint64_t seed,
                                               int threads = 0) {
  if (count < 0) throw std::invalid_argument("run_episodes: negative count");
  std::vector<EpisodeRecord> out(static_cast<std::size_t>(count));
  if (count == 0) return out;
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, count);

  std::atomic<int> next{0};
  auto work = [&] {
    Environment env(settings.channel, settings.world);
    for (int i = next++; i < count; i = next++) {
      Rng rng(substream_seed(seed, "actions", static_cast<std::uint64_t>(i)));
      out[i] = run_episode(env, policy, substream_seed(seed, "episode", static_cast<std::uint64_t>(i)),
                           rng);
    }
  };
  if (threads == 1) {
    work();
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        work();
      } catch (...) {
        errors[t] = std::current_exception();
        next = count;
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

struct CdfPoint {
  int movements;
  double fraction;
  friend bool operator==(const CdfPoint&, const CdfPoint&) = default;
};

inline std::vector<int> successful_movements(const std::vector<EpisodeRecord>& records) {
  std::vector<int> m;
  for (const auto& r : records) {
    if (r.success) m.push_back(r.movements);
  }
  return m;
}

// Empirical CDF of movement counts; one point per distinct value.
inline std::vector<CdfPoint> cdf(std::vector<int> movements) {
  std::sort(movements.begin(), movements.end());
  std::vector<CdfPoint> out;
  const double n = static_cast<double>(movements.size());
  for (std::size_t i = 0; i < movements.size(); ++i) {
    if (i + 1 == movements.size() || movements[i + 1] != movements[i]) {
      out.push_back({movements[i], static_cast<double>(i + 1) / n});
    }
  }
  if (!out.empty()) out.back().fraction = 1.0;
  return out;
}

// CDF over successful episodes; nullopt when no episode succeeded.
inline std::optional<std::vector<CdfPoint>> cdf(const std::vector<EpisodeRecord>& records) {
  auto m = successful_movements(records);
  if (m.empty()) return std::nullopt;
  return cdf(std::move(m));
}

// Nearest-rank percentile: the smallest value v with CDF(v) >= p/100.
inline int percentile(std::vector<int> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile: empty input");
  if (!(p > 0 && p <= 100)) throw std::domain_error("percentile: p must lie in (0, 100]");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

inline int percentile(const std::vector<EpisodeRecord>& records, double p) {
  auto m = successful_movements(records);
  if (m.empty()) throw std::invalid_argument("percentile: no successful episodes");
  return percentile(std::move(m), p);
}

// tau = M L / F + sum(d_m) / v
inline double tracking_time(int movements, double total_travel, int obs_len, double sample_hz,
                            double speed) {
  if (!(sample_hz > 0)) throw std::domain_error("tracking_time: F must be > 0");
  if (!(speed > 0)) throw std::domain_error("tracking_time: v must be > 0");
  return movements * static_cast<double>(obs_len) / sample_hz + total_travel / speed;
}

inline double tracking_time(const EpisodeRecord& rec, double sample_hz, double speed,
                            int obs_len) {
  return tracking_time(rec.movements, rec.total_travel(), obs_len, sample_hz, speed);
}

struct MetricsRow {
  double sample_hz = 0.0;
  double rho = 0.0;
  double speed = 0.0;
  int episodes = 0;
  double success_rate = 0.0;
  std::optional<int> p50;
  std::optional<int> p90;
  std::optional<double> mean_tau;  // over successful episodes
};

inline MetricsRow summarize(const std::vector<EpisodeRecord>& records, double sample_hz,
                            double rho, double speed, int obs_len) {
  MetricsRow row{sample_hz, rho, speed, static_cast<int>(records.size()), 0.0, {}, {}, {}};
  const auto m = successful_movements(records);
  if (!records.empty()) row.success_rate = static_cast<double>(m.size()) / records.size();
  if (!m.empty()) {
    row.p50 = percentile(m, 50);
    row.p90 = percentile(m, 90);
    double tau = 0.0;
    for (const auto& r : records) {
      if (r.success) tau += tracking_time(r, sample_hz, speed, obs_len);
    }
    row.mean_tau = tau / static_cast<double>(m.size());
  }
  return row;
}

inline constexpr const char* kEvalCsvHeader = "F,rho,v,episode,success,movements,sum_dist_m,tau_s";
inline constexpr const char* kSummaryCsvHeader = "F,rho,v,n,success_rate,p50,p90,mean_tau_s";

inline void write_eval_rows(std::ostream& os, const std::vector<EpisodeRecord>& records,
                            int obs_len) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    os << format_shortest(r.sample_hz) << ',' << format_shortest(r.rho) << ','
       << format_shortest(r.speed) << ',' << i << ',' << (r.success ? 1 : 0) << ',' << r.movements << ','
       << format_shortest(r.total_travel()) << ','
       << format_shortest(tracking_time(r, r.sample_hz, r.speed, obs_len)) << '\n';
  }
}

inline void write_summary_row(std::ostream& os, const MetricsRow& row) {
  os << format_shortest(row.sample_hz) << ',' << format_shortest(row.rho) << ','
     << format_shortest(row.speed) << ',' << row.episodes << ',' << format_shortest(row.success_rate) << ',';
  if (row.p50) os << *row.p50;
  os << ',';
  if (row.p90) os << *row.p90;
  os << ',';
  if (row.mean_tau) os << format_shortest(*row.mean_tau);
  os << '\n';
}

}  // namespace uavchase
