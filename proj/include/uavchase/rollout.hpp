#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <ostream>
#include <vector>

#include "uavchase/checkpoint.hpp"
#include "uavchase/net.hpp"
#include "uavchase/world.hpp"

namespace uavchase {

struct EnvSettings {
  ChannelParams channel;
  WorldParams world;
};

// Chooses the next action from the current observation. Implementations must
// be safe to call concurrently from several episodes.
using PolicyFn = std::function<ActionVector(const Environment&, const Observation&, Rng&)>;

inline ActionVector act_with_networks(const NetworkQuad& nets, const Observation& obs, Rng& rng,
                                      bool greedy) {
  std::array<int, 4> idx{};
  for (int n = 0; n < 4; ++n) {
    const auto out = forward(nets[n], obs);
    idx[n] = sample_action(out.policy, rng, greedy);
  }
  return ActionVector::from_indices(idx);
}

inline PolicyFn network_policy(std::shared_ptr<const NetworkQuad> nets, bool greedy) {
  return [nets = std::move(nets), greedy](const Environment&, const Observation& obs, Rng& rng) {
    return act_with_networks(*nets, obs, rng, greedy);
  };
}

inline PolicyFn uniform_policy() {
  return [](const Environment&, const Observation&, Rng& rng) {
    std::uniform_int_distribution<int> pick(0, kActionCount - 1);
    return ActionVector::from_indices({pick(rng), pick(rng), pick(rng), pick(rng)});
  };
}

// Scripted pursuer with ground-truth access: on every axis takes the action
// closest to the remaining offset (smaller magnitude on ties). Test hook.
inline PolicyFn oracle_policy() {
  return [](const Environment& env, const Observation&, Rng&) {
    const Vec3 diff = env.target().position - env.swarm().center;
    std::array<int, 3> moves{};
    for (int n = 0; n < 3; ++n) {
      int best = 0;
      for (int a : kAxisActions) {
        const double err = std::abs(diff[n] - a);
        const double best_err = std::abs(diff[n] - best);
        if (err < best_err || (err == best_err && std::abs(a) < std::abs(best))) best = a;
      }
      moves[n] = best;
    }
    return ActionVector{3, moves[0], moves[1], moves[2]};
  };
}

struct EpisodeRecord {
  int movements = 0;
  bool success = false;
  std::vector<double> travel;  // d_m per movement
  double sample_hz = 0.0;
  double rho = 0.0;
  double speed = 0.0;
  std::uint64_t seed = 0;

  double total_travel() const {
    double s = 0.0;
    for (double d : travel) s += d;
    return s;
  }
};

// Plays one episode to success or MAX_STEPS. When trace is given, writes the
// per-movement CSV trace.
inline EpisodeRecord run_episode(Environment& env, const PolicyFn& policy, std::uint64_t seed,
                                 Rng& rng, std::ostream* trace = nullptr) {
  EpisodeRecord rec;
  rec.seed = seed;
  rec.sample_hz = env.channel_params().sample_hz;
  rec.rho = env.channel_params().rho;
  rec.speed = env.world_params().tracker_speed;
  Observation obs = env.reset(seed);
  if (trace != nullptr) write_trace_header(*trace);
  while (!env.done()) {
    const auto action = policy(env, obs, rng);
    auto out = env.step(action);
    ++rec.movements;
    rec.travel.push_back(out.travel);
    if (trace != nullptr) write_trace_row(*trace, rec.movements, env, out);
    obs = std::move(out.next);
  }
  rec.success = env.success();
  return rec;
}

}  // namespace uavchase
