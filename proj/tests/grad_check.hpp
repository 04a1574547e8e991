#pragma once

// Central finite-difference check of the network backward pass.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "uavchase/net.hpp"

namespace gradcheck {

struct GroupError {
  std::string tensor;
  double max_rel = 0.0;
};

// Objective f(theta) = dot(c, logits) + c_v * value for random fixed c, c_v.
// Returns the worst relative error per tensor over every entry.
inline std::vector<GroupError> check(const uavchase::NetShape& shape, int steps,
                                     std::uint64_t seed, double h = 1e-4) {
  using namespace uavchase;
  auto params = init_params<double>(shape, seed);
  std::mt19937_64 rng(seed ^ 0x9e37u);
  std::normal_distribution<double> n01(0.0, 1.0);
  Mat<double> x(shape.input, steps);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n01(rng);
  Vec<double> c(shape.actions);
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = n01(rng);
  const double cv = n01(rng);

  auto objective = [&](const NetworkParams<double>& p) {
    const auto r = forward(p, x);
    return c.dot(r.logits) + cv * r.value;
  };
  const auto fwd = forward(params, x);
  const auto grads = backward(params, fwd.trace, c, cv);

  const auto layout = tensor_layout(shape);
  std::vector<GroupError> out;
  for (std::size_t t = 0; t < params.tensors.size(); ++t) {
    GroupError ge{layout[t].name, 0.0};
    auto& tensor = params.tensors[t];
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      const double orig = tensor.data()[i];
      tensor.data()[i] = orig + h;
      const double fp = objective(params);
      tensor.data()[i] = orig - h;
      const double fm = objective(params);
      tensor.data()[i] = orig;
      const double numeric = (fp - fm) / (2 * h);
      const double analytic = grads.tensors[t].data()[i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-7});
      ge.max_rel = std::max(ge.max_rel, std::abs(numeric - analytic) / denom);
    }
    out.push_back(ge);
  }
  return out;
}

inline double worst(const std::vector<GroupError>& e) {
  double w = 0.0;
  for (const auto& g : e) w = std::max(w, g.max_rel);
  return w;
}

}  // namespace gradcheck
