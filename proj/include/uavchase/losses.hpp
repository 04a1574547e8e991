#pragma once

// n-step returns, advantages and the actor-critic loss of one network over a
// rolled trajectory segment, with its gradient.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "uavchase/net.hpp"

namespace uavchase {

enum class ValueLoss {
  nstep,  // |G_k - V(S_k)|
  td0,    // |R_{k+1} + gamma V(S_{k+1}) - V(S_k)|
};

struct LossConfig {
  double gamma = 0.99;
  double beta = 0.01;
  ValueLoss value_loss = ValueLoss::nstep;
};

// G_k = R_{k+1} + gamma G_{k+1}, seeded with the bootstrap value after the
// last reward (zero for terminal segments).
inline std::vector<double> nstep_returns(std::span<const double> rewards, double bootstrap,
                                         double gamma) {
  if (rewards.empty()) throw std::invalid_argument("nstep_returns: empty reward list");
  std::vector<double> g(rewards.size());
  double acc = bootstrap;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    acc = rewards[k] + gamma * acc;
    g[k] = acc;
  }
  return g;
}

inline double advantage(double ret, double value) { return ret - value; }

struct LossBreakdown {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double total = 0.0;
};

// One step of a segment as seen by a single network.
template <class S>
struct NetStep {
  const ForwardResult<S>* fwd = nullptr;
  int action = 0;
  double reward = 0.0;
};

// Loss of one network over a segment of length n. The advantage is treated as
// a constant in the policy term; the value term only differentiates V(S_k).
// When grads is non-null the gradient of the total loss is accumulated there.
template <class S>
LossBreakdown network_loss(const NetworkParams<S>& params, std::span<const NetStep<S>> steps,
                           double bootstrap_value, bool terminal, const LossConfig& cfg,
                           ParamSet<S>* grads) {
  if (steps.empty()) throw std::invalid_argument("network_loss: empty segment");
  const std::size_t n = steps.size();
  std::vector<double> rewards(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (steps[k].fwd == nullptr) throw std::invalid_argument("network_loss: missing forward");
    rewards[k] = steps[k].reward;
  }
  const double tail = terminal ? 0.0 : bootstrap_value;
  const auto returns = nstep_returns(rewards, tail, cfg.gamma);
  const double inv_n = 1.0 / static_cast<double>(n);

  LossBreakdown out;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& f = *steps[k].fwd;
    const int a = steps[k].action;
    if (a < 0 || a >= f.policy.size()) throw ContractError("network_loss: action out of range");

    const double v = static_cast<double>(f.value);
    const double adv = advantage(returns[k], v);
    Vec<double> logits = f.logits.template cast<double>();
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    Vec<double> logp = logits.array() - lse;
    Vec<double> p = logp.array().exp();
    const double h = -(p.array() * logp.array()).sum();

    double residual = adv;
    if (cfg.value_loss == ValueLoss::td0) {
      const double next = k + 1 < n ? static_cast<double>(steps[k + 1].fwd->value) : tail;
      residual = rewards[k] + cfg.gamma * next - v;
    }

    out.policy -= adv * logp[a];
    out.value += std::abs(residual);
    out.entropy += h;

    if (grads != nullptr) {
      Vec<double> d_logits = adv * p;
      d_logits[a] -= adv;
      d_logits += cfg.beta * (p.array() * (logp.array() + h)).matrix();
      d_logits *= inv_n;
      const double sign = residual > 0 ? 1.0 : (residual < 0 ? -1.0 : 0.0);
      const double d_value = -sign * inv_n;
      backward(params, f.trace, Vec<S>(d_logits.template cast<S>()), static_cast<S>(d_value),
               *grads);
    }
  }
  out.policy *= inv_n;
  out.value *= inv_n;
  out.entropy *= inv_n;
  out.total = out.policy + out.value - cfg.beta * out.entropy;
  return out;
}

}  // namespace uavchase
