#pragma once

// Pursuit environment: six trackers on the vertices of an octahedron around
// the swarm center, a stationary target, RSSI observations and the
// per-network rewards.

#include <array>
#include <cmath>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>

#include <Eigen/Core>

#include "uavchase/channel.hpp"
#include "uavchase/core.hpp"

namespace uavchase {

struct WorldParams {
  int obs_len = 50;               // L
  double initial_radius = 100.0;  // |O_0 - U|
  double success_radius = 2.0;    // th
  int max_steps = 500;
  double initial_spacing = 3.0;
  double tracker_speed = 2.0;     // v, converts travel distance into channel time
  bool freeze_during_travel = false;

  void validate() const {
    if (obs_len < 1) throw std::domain_error("world.obs_len must be >= 1");
    if (!(initial_radius > 0)) throw std::domain_error("world.initial_radius must be > 0");
    if (!(success_radius >= 0)) throw std::domain_error("world.success_radius must be >= 0");
    if (max_steps < 1) throw std::domain_error("world.max_steps must be >= 1");
    if (!(tracker_speed > 0)) throw std::domain_error("world.tracker_speed must be > 0");
    if (!(initial_spacing > 0)) throw std::domain_error("world.initial_spacing must be > 0");
  }
};

inline constexpr std::array<int, 5> kSpacingActions{1, 2, 3, 4, 5};
inline constexpr std::array<int, 5> kAxisActions{-4, -2, 0, 2, 4};
inline constexpr int kActionCount = 5;
inline constexpr double kMinDistance = 0.1;

// Order of the four orthogonal controls and of their networks.
enum class Dim : int { d = 0, x = 1, y = 2, z = 3 };
inline constexpr std::array<char, 4> kDimNames{'d', 'x', 'y', 'z'};

struct ActionVector {
  int spacing = 3;
  int dx = 0;
  int dy = 0;
  int dz = 0;

  static ActionVector from_indices(const std::array<int, 4>& idx) {
    for (int i : idx) {
      if (i < 0 || i >= kActionCount) throw ContractError("action index out of range");
    }
    return {kSpacingActions[idx[0]], kAxisActions[idx[1]], kAxisActions[idx[2]],
            kAxisActions[idx[3]]};
  }

  std::array<int, 4> indices() const {
    validate();
    return {spacing - 1, (dx + 4) / 2, (dy + 4) / 2, (dz + 4) / 2};
  }

  void validate() const {
    if (spacing < 1 || spacing > 5) {
      throw ContractError("spacing action " + std::to_string(spacing) + " outside {1..5}");
    }
    for (int a : {dx, dy, dz}) {
      if (a < -4 || a > 4 || a % 2 != 0) {
        throw ContractError("axis action " + std::to_string(a) + " outside {-4,-2,0,2,4}");
      }
    }
  }

  Vec3 translation() const { return {double(dx), double(dy), double(dz)}; }
  friend bool operator==(const ActionVector&, const ActionVector&) = default;
};

struct SwarmState {
  Vec3 center = Vec3::Zero();
  double spacing = 3.0;
  int steps = 0;

  // Receiver u sits at center +/- spacing along axis u/2 (+x, -x, +y, -y, +z, -z).
  std::array<Vec3, kReceivers> positions() const {
    std::array<Vec3, kReceivers> p;
    for (int u = 0; u < kReceivers; ++u) {
      Vec3 offset = Vec3::Zero();
      offset[u / 2] = (u % 2 == 0 ? spacing : -spacing);
      p[u] = center + offset;
    }
    return p;
  }
};

struct Target {
  Vec3 position = Vec3::Zero();
};

struct Observation {
  Eigen::Matrix<double, Eigen::Dynamic, kReceivers, Eigen::RowMajor> rssi;  // L x 6, dBm
  double duration_s = 0.0;

  int rows() const { return static_cast<int>(rssi.rows()); }
};

struct StepOutcome {
  std::array<double, 4> rewards{};  // d, x, y, z
  Observation next;
  bool done = false;
  bool success = false;
  double travel = 0.0;  // |O_{t+1} - O_t|
};

inline Vec3 sample_on_sphere(Rng& rng, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec3 v;
  do {
    v = {normal(rng), normal(rng), normal(rng)};
  } while (v.norm() == 0.0);
  return v * (radius / v.norm());
}

class Environment {
 public:
  Environment(ChannelParams channel, WorldParams world)
      : channel_params_(channel), world_(world) {
    channel_params_.validate();
    world_.validate();
  }

  // Starts an episode: swarm at the origin, target uniformly on the sphere of
  // radius initial_radius, fresh fading process. Returns the first observation.
  Observation reset(std::uint64_t seed) {
    Rng rng(substream_seed(seed, "target"));
    swarm_ = SwarmState{Vec3::Zero(), world_.initial_spacing, 0};
    target_ = Target{sample_on_sphere(rng, world_.initial_radius)};
    fading_.emplace(channel_params_, substream_seed(seed, "channel"));
    done_ = false;
    success_ = false;
    return observe();
  }

  // Test hook: overrides the geometry of the current episode.
  void place(const Vec3& center, const Vec3& target, double spacing = 3.0) {
    if (!fading_) fading_.emplace(channel_params_, 0);
    swarm_.center = center;
    swarm_.spacing = spacing;
    swarm_.steps = 0;
    target_.position = target;
    done_ = false;
    success_ = false;
  }

  std::array<double, kReceivers> receiver_distances() const {
    std::array<double, kReceivers> d{};
    const auto pos = swarm_.positions();
    for (int u = 0; u < kReceivers; ++u) {
      d[u] = (pos[u] - target_.position).norm();
      if (d[u] < kMinDistance) {
        std::clog << "uavchase: warning: receiver " << u << " at " << d[u]
                  << " m from target, clamped to " << kMinDistance << " m\n";
        d[u] = kMinDistance;
      }
    }
    return d;
  }

  // Captures L samples per receiver at 1/F spacing.
  Observation observe() {
    require_fading();
    const int rows = world_.obs_len;
    const double dt = 1.0 / channel_params_.sample_hz;
    const auto distances = receiver_distances();
    Observation obs;
    obs.rssi.resize(rows, kReceivers);
    for (int i = 0; i < rows; ++i) {
      const auto samples = rssi(channel_params_, *fading_, distances, dt);
      for (int u = 0; u < kReceivers; ++u) obs.rssi(i, u) = samples[u].value_dbm;
    }
    obs.duration_s = rows * dt;
    return obs;
  }

  StepOutcome step(const ActionVector& action) {
    action.validate();
    require_fading();
    if (done_) throw ContractError("step called on a finished episode");

    const Vec3 before = swarm_.center;
    const Vec3& u = target_.position;
    swarm_.spacing = action.spacing;
    swarm_.center = before + action.translation();
    ++swarm_.steps;

    StepOutcome out;
    const Vec3& after = swarm_.center;
    out.rewards[0] = (before - u).norm() - (after - u).norm();
    for (int n = 0; n < 3; ++n) {
      out.rewards[n + 1] = std::abs(before[n] - u[n]) - std::abs(after[n] - u[n]);
    }
    out.travel = (after - before).norm();
    if (!world_.freeze_during_travel && out.travel > 0) {
      fading_->advance(out.travel / world_.tracker_speed);
    }

    success_ = distance() <= world_.success_radius;
    done_ = success_ || swarm_.steps >= world_.max_steps;
    out.success = success_;
    out.done = done_;
    out.next = observe();
    return out;
  }

  double distance() const { return (swarm_.center - target_.position).norm(); }
  bool done() const { return done_; }
  bool success() const { return success_; }
  const SwarmState& swarm() const { return swarm_; }
  const Target& target() const { return target_; }
  const FadingProcess& fading() const { return *fading_; }
  const ChannelParams& channel_params() const { return channel_params_; }
  const WorldParams& world_params() const { return world_; }

 private:
  void require_fading() const {
    if (!fading_) throw ContractError("environment used before reset");
  }

  ChannelParams channel_params_;
  WorldParams world_;
  SwarmState swarm_;
  Target target_;
  std::optional<FadingProcess> fading_;
  bool done_ = true;
  bool success_ = false;
};

// Per-movement episode trace: move,Ox,Oy,Oz,d_t,Ux,Uy,Uz,Rd,Rx,Ry,Rz,dist
inline void write_trace_header(std::ostream& os) {
  os << "move,Ox,Oy,Oz,d_t,Ux,Uy,Uz,Rd,Rx,Ry,Rz,dist\n";
}

inline void write_trace_row(std::ostream& os, int move, const Environment& env,
                            const StepOutcome& out) {
  const auto& o = env.swarm().center;
  const auto& u = env.target().position;
  os << move << ',' << o.x() << ',' << o.y() << ',' << o.z() << ',' << env.swarm().spacing << ','
     << u.x() << ',' << u.y() << ',' << u.z() << ',' << out.rewards[0] << ',' << out.rewards[1]
     << ',' << out.rewards[2] << ',' << out.rewards[3] << ',' << env.distance() << '\n';
}

}  // namespace uavchase
