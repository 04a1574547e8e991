#pragma once

// Log-distance path loss plus spatially correlated Rician fading for the six
// tracker receivers. The diffuse part of every receiver is a sum of
// sinusoids (Clarke spectrum); receivers are mixed by the Cholesky factor of
// the uniform correlation matrix so that E[w_i w_j*] = rho for i != j.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "uavchase/core.hpp"

namespace uavchase {

inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr int kReceivers = 6;

struct ChannelParams {
  double p_tx = 23.0;        // dBm
  double d0 = 1.0;           // m
  double l0 = 30.0;          // dB at d0
  double path_exp = 2.6;
  double k_factor = 3.0;     // linear; +inf gives a pure line-of-sight channel
  double doppler_hz = 1.0;
  double rho = 0.5;
  double sample_hz = 10.0;   // F
  double carrier_hz = 3e9;
  int rx_count = kReceivers;

  void validate() const {
    if (!(d0 > 0)) throw std::domain_error("channel.d0 must be > 0");
    if (!(sample_hz > 0)) throw std::domain_error("channel.sample_hz must be > 0");
    if (!(k_factor >= 0)) throw std::domain_error("channel.k_factor must be >= 0");
    if (!(path_exp > 0)) throw std::domain_error("channel.path_exp must be > 0");
    if (!(doppler_hz >= 0)) throw std::domain_error("channel.doppler_hz must be >= 0");
    if (!(carrier_hz > 0)) throw std::domain_error("channel.carrier_hz must be > 0");
    if (!(rho >= 0 && rho < 1)) throw std::domain_error("channel.rho must lie in [0, 1)");
    if (rx_count != kReceivers) throw std::domain_error("channel.rx_count must be 6");
  }
};

inline double path_loss(const ChannelParams& params, double distance_m) {
  if (!(distance_m > 0)) throw std::domain_error("path_loss: distance must be > 0");
  return params.l0 + 10.0 * params.path_exp * std::log10(distance_m / params.d0);
}

inline double doppler_from_velocity(double speed_mps, double carrier_hz) {
  if (!(speed_mps >= 0)) throw std::domain_error("doppler_from_velocity: speed must be >= 0");
  if (!(carrier_hz > 0)) throw std::domain_error("doppler_from_velocity: carrier must be > 0");
  return speed_mps / kSpeedOfLight * carrier_hz;
}

using SpatialMatrix = Eigen::Matrix<double, kReceivers, kReceivers>;

inline SpatialMatrix correlation_matrix(double rho) {
  SpatialMatrix c = SpatialMatrix::Constant(rho);
  c.diagonal().setOnes();
  return c;
}

// Lower-triangular L with L L^T = C(rho).
inline SpatialMatrix spatial_factor(double rho) {
  if (!(rho >= 0 && rho < 1)) throw std::domain_error("spatial_factor: rho must lie in [0, 1)");
  Eigen::LLT<SpatialMatrix> llt(correlation_matrix(rho));
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("spatial_factor: correlation matrix is not positive definite");
  }
  return llt.matrixL();
}

class FadingProcess {
 public:
  static constexpr int kPaths = 64;
  using Gains = std::array<std::complex<double>, kReceivers>;

  FadingProcess(const ChannelParams& params, std::uint64_t seed)
      : doppler_hz_(params.doppler_hz), mixing_(spatial_factor(params.rho)) {
    params.validate();
    if (std::isinf(params.k_factor)) {
      los_weight_ = 1.0;
      diffuse_weight_ = 0.0;
    } else {
      los_weight_ = std::sqrt(params.k_factor / (params.k_factor + 1.0));
      diffuse_weight_ = std::sqrt(1.0 / (params.k_factor + 1.0));
    }
    Rng rng(seed);
    std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
    const double w = 2.0 * std::numbers::pi * doppler_hz_;
    for (int u = 0; u < kReceivers; ++u) {
      los_[u] = std::polar(1.0, phase(rng));
      // Arrival angles cover a quarter circle with a random per-receiver
      // offset; in-phase paths use cos(angle), quadrature paths sin(angle).
      const double offset = phase(rng);
      for (int m = 0; m < kPaths; ++m) {
        const double angle =
            (2.0 * std::numbers::pi * (m + 1) - std::numbers::pi + offset) / (4.0 * kPaths);
        banks_[u].omega_i[m] = w * std::cos(angle);
        banks_[u].omega_q[m] = w * std::sin(angle);
        banks_[u].phase_i[m] = phase(rng);
        banks_[u].phase_q[m] = phase(rng);
      }
    }
    evaluate_exact();
    mix();
  }

  // Advances channel time by dt seconds and returns the six complex gains.
  const Gains& advance(double dt) {
    if (!(dt >= 0)) throw std::domain_error("FadingProcess::advance: dt must be >= 0");
    time_ += dt;
    if (dt == 0.0) return gains_;
    if (dt == last_dt_ && rotations_ < kReanchorEvery) {
      rotate();
      ++rotations_;
    } else {
      if (dt != last_dt_) prepare_rotation(dt);
      evaluate_exact();
      rotations_ = 0;
    }
    mix();
    return gains_;
  }

  double time() const { return time_; }
  const Gains& gains() const { return gains_; }
  // Correlated diffuse components w = L z, unit average power per receiver.
  const Gains& diffuse() const { return diffuse_; }
  const SpatialMatrix& mixing() const { return mixing_; }
  std::complex<double> los(int u) const { return los_.at(u); }
  double los_weight() const { return los_weight_; }
  double diffuse_weight() const { return diffuse_weight_; }

 private:
  static constexpr int kReanchorEvery = 1024;

  struct Bank {
    std::array<double, kPaths> omega_i{}, omega_q{}, phase_i{}, phase_q{};
    std::array<std::complex<double>, kPaths> rot_i{}, rot_q{};    // phasor at time_
    std::array<std::complex<double>, kPaths> step_i{}, step_q{};  // e^{j omega dt}
  };

  void evaluate_exact() {
    for (auto& b : banks_) {
      for (int m = 0; m < kPaths; ++m) {
        b.rot_i[m] = std::polar(1.0, b.omega_i[m] * time_ + b.phase_i[m]);
        b.rot_q[m] = std::polar(1.0, b.omega_q[m] * time_ + b.phase_q[m]);
      }
    }
  }

  void prepare_rotation(double dt) {
    last_dt_ = dt;
    for (auto& b : banks_) {
      for (int m = 0; m < kPaths; ++m) {
        b.step_i[m] = std::polar(1.0, b.omega_i[m] * dt);
        b.step_q[m] = std::polar(1.0, b.omega_q[m] * dt);
      }
    }
  }

  void rotate() {
    for (auto& b : banks_) {
      for (int m = 0; m < kPaths; ++m) {
        b.rot_i[m] *= b.step_i[m];
        b.rot_q[m] *= b.step_q[m];
      }
    }
  }

  void mix() {
    const double norm = std::sqrt(1.0 / kPaths);
    std::array<std::complex<double>, kReceivers> z{};
    for (int u = 0; u < kReceivers; ++u) {
      double re = 0.0, im = 0.0;
      for (int m = 0; m < kPaths; ++m) {
        re += banks_[u].rot_i[m].real();
        im += banks_[u].rot_q[m].real();
      }
      z[u] = {norm * re, norm * im};
    }
    for (int i = 0; i < kReceivers; ++i) {
      std::complex<double> w{};
      for (int j = 0; j <= i; ++j) w += mixing_(i, j) * z[j];
      diffuse_[i] = w;
      gains_[i] = los_weight_ * los_[i] + diffuse_weight_ * w;
    }
  }

  double doppler_hz_;
  SpatialMatrix mixing_;
  double los_weight_ = 1.0;
  double diffuse_weight_ = 0.0;
  std::array<std::complex<double>, kReceivers> los_{};
  std::array<Bank, kReceivers> banks_{};
  Gains gains_{};
  Gains diffuse_{};
  double time_ = 0.0;
  double last_dt_ = std::numeric_limits<double>::quiet_NaN();
  int rotations_ = 0;
};

struct RssiSample {
  double value_dbm;
  int receiver;
  double time_s;
};

// Smallest fading magnitude admitted into the dB conversion (-200 dB).
inline constexpr double kMinGainMagnitude = 1e-10;

inline double fading_db(std::complex<double> gain) {
  return 20.0 * std::log10(std::max(std::abs(gain), kMinGainMagnitude));
}

inline std::array<RssiSample, kReceivers> rssi(const ChannelParams& params,
                                               FadingProcess& process,
                                               const std::array<double, kReceivers>& distances,
                                               double dt) {
  std::array<double, kReceivers> loss{};
  for (int u = 0; u < kReceivers; ++u) loss[u] = path_loss(params, distances[u]);
  const auto& gains = process.advance(dt);
  std::array<RssiSample, kReceivers> out{};
  for (int u = 0; u < kReceivers; ++u) {
    out[u] = {params.p_tx - loss[u] + fading_db(gains[u]), u, process.time()};
  }
  return out;
}

}  // namespace uavchase
