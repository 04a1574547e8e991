#pragma once

#include <cmath>
#include <cstdint>

#include "uavchase/net.hpp"

namespace uavchase {

struct AdamHyper {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class S>
struct OptimizerState {
  AdamHyper hyper;
  ParamSet<S> m;
  ParamSet<S> v;
  std::uint64_t step = 0;

  static OptimizerState for_shape(const NetShape& shape, AdamHyper hyper = {}) {
    return {hyper, ParamSet<S>::zeros(shape), ParamSet<S>::zeros(shape), 0};
  }
};

// One bias-corrected Adam step: theta -= lr * m_hat / (sqrt(v_hat) + eps).
template <class S>
void adam_apply(OptimizerState<S>& opt, ParamSet<S>& params, const ParamSet<S>& grads,
                double lr) {
  if (!params.same_layout(grads) || !params.same_layout(opt.m) || !params.same_layout(opt.v)) {
    throw ShapeError("adam_apply: shape mismatch");
  }
  ++opt.step;
  const auto& h = opt.hyper;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(opt.step));
  const S b1 = static_cast<S>(h.beta1), b2 = static_cast<S>(h.beta2);
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    auto m = opt.m.tensors[i].array();
    auto v = opt.v.tensors[i].array();
    const auto g = grads.tensors[i].array();
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g * g;
    params.tensors[i].array() -=
        static_cast<S>(lr) * (m / static_cast<S>(c1)) /
        ((v / static_cast<S>(c2)).sqrt() + static_cast<S>(h.epsilon));
  }
}

template <class S>
void adam_apply(OptimizerState<S>& opt, ParamSet<S>& params, const ParamSet<S>& grads) {
  adam_apply(opt, params, grads, opt.hyper.lr);
}

template <class S>
double global_norm(const ParamSet<S>& grads) {
  double sq = 0.0;
  for (const auto& t : grads.tensors) sq += t.template cast<double>().squaredNorm();
  return std::sqrt(sq);
}

// Rescales grads so that their global L2 norm is at most max_norm. Returns the
// norm before clipping.
template <class S>
double clip_global_norm(ParamSet<S>& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0 && norm > max_norm) {
    const S scale = static_cast<S>(max_norm / norm);
    for (auto& t : grads.tensors) t *= scale;
  }
  return norm;
}

}  // namespace uavchase
