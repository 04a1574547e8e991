#pragma once

// Per-dimension actor-critic network: stacked LSTM layers over the L x 6 RSSI
// matrix (one timestep per sampling instant), ReLU dense layers on the final
// hidden state, a softmax policy head over five actions and a scalar value
// head. Gradients are computed by hand with backpropagation through time.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "uavchase/core.hpp"
#include "uavchase/world.hpp"

namespace uavchase {

struct NetShape {
  int input = kReceivers;
  int lstm_layers = 3;
  int hidden = 128;
  int dense_layers = 2;
  int dense_width = 128;
  int actions = kActionCount;

  void validate() const {
    if (input < 1 || lstm_layers < 1 || hidden < 1 || dense_layers < 0 || dense_width < 1 ||
        actions < 1) {
      throw ShapeError("network shape has a non-positive dimension");
    }
  }
  friend bool operator==(const NetShape&, const NetShape&) = default;
};

struct TensorSpec {
  std::string name;
  int rows;
  int cols;
  int rank;  // 1 for biases, 2 for weight matrices
  int fan_in;
};

// Parameter layout shared by weights, gradients, optimizer moments and the
// checkpoint format. Per LSTM layer: W (4H x in), U (4H x H), b (4H), gate
// blocks ordered input, forget, cell, output. Then each dense layer W, b;
// policy W, b; value W, b.
inline std::vector<TensorSpec> tensor_layout(const NetShape& s) {
  std::vector<TensorSpec> out;
  for (int l = 0; l < s.lstm_layers; ++l) {
    const int in = l == 0 ? s.input : s.hidden;
    const std::string p = "lstm" + std::to_string(l);
    out.push_back({p + ".W", 4 * s.hidden, in, 2, in});
    out.push_back({p + ".U", 4 * s.hidden, s.hidden, 2, s.hidden});
    out.push_back({p + ".b", 4 * s.hidden, 1, 1, s.hidden});
  }
  int width = s.hidden;
  for (int l = 0; l < s.dense_layers; ++l) {
    const std::string p = "dense" + std::to_string(l);
    out.push_back({p + ".W", s.dense_width, width, 2, width});
    out.push_back({p + ".b", s.dense_width, 1, 1, width});
    width = s.dense_width;
  }
  out.push_back({"policy.W", s.actions, width, 2, width});
  out.push_back({"policy.b", s.actions, 1, 1, width});
  out.push_back({"value.W", 1, width, 2, width});
  out.push_back({"value.b", 1, 1, 1, width});
  return out;
}

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Tensors in tensor_layout order. Used for parameters, gradients and moments.
template <class S>
struct ParamSet {
  NetShape shape;
  std::vector<Mat<S>> tensors;

  static ParamSet zeros(const NetShape& shape) {
    shape.validate();
    ParamSet p{shape, {}};
    for (const auto& t : tensor_layout(shape)) p.tensors.push_back(Mat<S>::Zero(t.rows, t.cols));
    return p;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
    return n;
  }

  void set_zero() {
    for (auto& t : tensors) t.setZero();
  }

  bool all_finite() const {
    return std::all_of(tensors.begin(), tensors.end(),
                       [](const Mat<S>& t) { return t.allFinite(); });
  }

  bool same_layout(const ParamSet& o) const {
    if (!(shape == o.shape) || tensors.size() != o.tensors.size()) return false;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      if (tensors[i].rows() != o.tensors[i].rows() || tensors[i].cols() != o.tensors[i].cols()) {
        return false;
      }
    }
    return true;
  }

  ParamSet& operator+=(const ParamSet& o) {
    if (!same_layout(o)) throw ShapeError("ParamSet += with mismatched layout");
    for (std::size_t i = 0; i < tensors.size(); ++i) tensors[i] += o.tensors[i];
    return *this;
  }

  template <class T>
  ParamSet<T> cast() const {
    ParamSet<T> out{shape, {}};
    for (const auto& t : tensors) out.tensors.push_back(t.template cast<T>());
    return out;
  }

  // Index helpers into the layout.
  int lstm_w(int l) const { return 3 * l; }
  int lstm_u(int l) const { return 3 * l + 1; }
  int lstm_b(int l) const { return 3 * l + 2; }
  int dense_w(int l) const { return 3 * shape.lstm_layers + 2 * l; }
  int dense_b(int l) const { return dense_w(l) + 1; }
  int policy_w() const { return 3 * shape.lstm_layers + 2 * shape.dense_layers; }
  int policy_b() const { return policy_w() + 1; }
  int value_w() const { return policy_w() + 2; }
  int value_b() const { return policy_w() + 3; }
};

template <class S>
using NetworkParams = ParamSet<S>;

// Uniform(+-1/sqrt(fan_in)) weights, forget-gate biases at 1.
template <class S>
NetworkParams<S> init_params(const NetShape& shape, std::uint64_t seed) {
  auto p = ParamSet<S>::zeros(shape);
  Rng rng(seed);
  const auto layout = tensor_layout(shape);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layout[i].fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto& t = p.tensors[i];
    for (Eigen::Index c = 0; c < t.cols(); ++c) {
      for (Eigen::Index r = 0; r < t.rows(); ++r) t(r, c) = static_cast<S>(dist(rng));
    }
  }
  for (int l = 0; l < shape.lstm_layers; ++l) {
    p.tensors[p.lstm_b(l)].middleRows(shape.hidden, shape.hidden).setConstant(S(1));
  }
  return p;
}

// RSSI in dBm mapped to roughly unit scale before the recurrent stack.
inline constexpr double kInputOffsetDbm = 60.0;
inline constexpr double kInputScaleDb = 20.0;

template <class S>
Mat<S> standardize(const Observation& obs) {
  if (!obs.rssi.allFinite()) throw std::domain_error("observation contains non-finite values");
  // Columns are timesteps.
  return ((obs.rssi.transpose().array() + kInputOffsetDbm) / kInputScaleDb)
      .matrix()
      .template cast<S>();
}

template <class S>
struct LstmTrace {
  Mat<S> input;  // in x L
  Mat<S> gates;  // 4H x L, post-activation (i, f, g, o)
  Mat<S> cell;   // H x L
  Mat<S> hidden; // H x L
};

template <class S>
struct ForwardTrace {
  NetShape shape;
  std::vector<LstmTrace<S>> lstm;
  std::vector<Vec<S>> dense_in;   // input of each dense layer; last entry feeds the heads
  std::vector<Vec<S>> dense_pre;  // pre-activation of each dense layer
  int length() const { return lstm.empty() ? 0 : static_cast<int>(lstm.front().input.cols()); }
};

template <class S>
struct ForwardResult {
  Vec<S> logits;
  Vec<S> policy;
  S value{};
  ForwardTrace<S> trace;
};

template <class S>
Vec<S> softmax(const Vec<S>& logits) {
  const S mx = logits.maxCoeff();
  Vec<S> e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

template <class S>
S entropy(const Vec<S>& p) {
  S h = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0) h -= p[i] * std::log(p[i]);
  }
  return h;
}

namespace detail {
template <class S>
S sigmoid(S x) {
  return S(1) / (S(1) + std::exp(-x));
}
}  // namespace detail

template <class S>
ForwardResult<S> forward(const NetworkParams<S>& params, const Mat<S>& inputs) {
  const auto& sh = params.shape;
  if (inputs.rows() != sh.input || inputs.cols() < 1) {
    throw ShapeError("forward: expected " + std::to_string(sh.input) + " features per timestep");
  }
  if (!inputs.allFinite()) throw std::domain_error("forward: non-finite input");
  const int H = sh.hidden;
  const Eigen::Index steps = inputs.cols();

  ForwardResult<S> res;
  res.trace.shape = sh;
  Mat<S> layer_in = inputs;
  for (int l = 0; l < sh.lstm_layers; ++l) {
    const auto& W = params.tensors[params.lstm_w(l)];
    const auto& U = params.tensors[params.lstm_u(l)];
    const auto& b = params.tensors[params.lstm_b(l)];
    LstmTrace<S> tr;
    tr.input = layer_in;
    tr.gates = (W * layer_in).colwise() + b.col(0);
    tr.cell.resize(H, steps);
    tr.hidden.resize(H, steps);
    Vec<S> h = Vec<S>::Zero(H);
    Vec<S> c = Vec<S>::Zero(H);
    for (Eigen::Index t = 0; t < steps; ++t) {
      auto g = tr.gates.col(t);
      if (t > 0) g.noalias() += U * h;
      for (int k = 0; k < H; ++k) {
        g[k] = detail::sigmoid(g[k]);
        g[H + k] = detail::sigmoid(g[H + k]);
        g[2 * H + k] = std::tanh(g[2 * H + k]);
        g[3 * H + k] = detail::sigmoid(g[3 * H + k]);
        c[k] = g[H + k] * c[k] + g[k] * g[2 * H + k];
        h[k] = g[3 * H + k] * std::tanh(c[k]);
      }
      tr.cell.col(t) = c;
      tr.hidden.col(t) = h;
    }
    layer_in = tr.hidden;
    res.trace.lstm.push_back(std::move(tr));
  }

  Vec<S> a = res.trace.lstm.back().hidden.col(steps - 1);
  for (int l = 0; l < sh.dense_layers; ++l) {
    res.trace.dense_in.push_back(a);
    Vec<S> z = params.tensors[params.dense_w(l)] * a + params.tensors[params.dense_b(l)].col(0);
    res.trace.dense_pre.push_back(z);
    a = z.cwiseMax(S(0));
  }
  res.trace.dense_in.push_back(a);
  res.logits = params.tensors[params.policy_w()] * a + params.tensors[params.policy_b()].col(0);
  res.policy = softmax<S>(res.logits);
  res.value = (params.tensors[params.value_w()] * a)(0) + params.tensors[params.value_b()](0, 0);
  return res;
}

template <class S>
ForwardResult<S> forward(const NetworkParams<S>& params, const Observation& obs) {
  return forward(params, standardize<S>(obs));
}

// Accumulates into grads the gradient of dot(d_logits, logits) + d_value * value.
template <class S>
void backward(const NetworkParams<S>& params, const ForwardTrace<S>& trace,
              const Vec<S>& d_logits, S d_value, ParamSet<S>& grads) {
  const auto& sh = params.shape;
  if (!(trace.shape == sh) || static_cast<int>(trace.lstm.size()) != sh.lstm_layers ||
      static_cast<int>(trace.dense_pre.size()) != sh.dense_layers) {
    throw ShapeError("backward: trace does not match parameters");
  }
  if (!grads.same_layout(params)) throw ShapeError("backward: gradient layout mismatch");
  if (d_logits.size() != sh.actions) throw ShapeError("backward: d_logits has wrong size");

  const Vec<S>& top = trace.dense_in.back();
  grads.tensors[grads.policy_w()].noalias() += d_logits * top.transpose();
  grads.tensors[grads.policy_b()].col(0) += d_logits;
  grads.tensors[grads.value_w()].row(0) += d_value * top.transpose();
  grads.tensors[grads.value_b()](0, 0) += d_value;

  Vec<S> da = params.tensors[params.policy_w()].transpose() * d_logits +
              params.tensors[params.value_w()].row(0).transpose() * d_value;
  for (int l = sh.dense_layers - 1; l >= 0; --l) {
    Vec<S> dz = (trace.dense_pre[l].array() > S(0)).select(da, S(0));
    grads.tensors[grads.dense_w(l)].noalias() += dz * trace.dense_in[l].transpose();
    grads.tensors[grads.dense_b(l)].col(0) += dz;
    da = params.tensors[params.dense_w(l)].transpose() * dz;
  }

  const int H = sh.hidden;
  const Eigen::Index steps = trace.length();
  Mat<S> d_hidden = Mat<S>::Zero(H, steps);
  d_hidden.col(steps - 1) = da;
  for (int l = sh.lstm_layers - 1; l >= 0; --l) {
    const auto& tr = trace.lstm[l];
    const auto& U = params.tensors[params.lstm_u(l)];
    Mat<S> d_pre(4 * H, steps);
    Vec<S> dh_next = Vec<S>::Zero(H);
    Vec<S> dc_next = Vec<S>::Zero(H);
    for (Eigen::Index t = steps - 1; t >= 0; --t) {
      const auto g = tr.gates.col(t);
      for (int k = 0; k < H; ++k) {
        const S i = g[k], f = g[H + k], cg = g[2 * H + k], o = g[3 * H + k];
        const S c = tr.cell(k, t);
        const S c_prev = t > 0 ? tr.cell(k, t - 1) : S(0);
        const S tc = std::tanh(c);
        const S dh = d_hidden(k, t) + dh_next[k];
        const S dc = dc_next[k] + dh * o * (S(1) - tc * tc);
        d_pre(k, t) = dc * cg * i * (S(1) - i);
        d_pre(H + k, t) = dc * c_prev * f * (S(1) - f);
        d_pre(2 * H + k, t) = dc * i * (S(1) - cg * cg);
        d_pre(3 * H + k, t) = dh * tc * o * (S(1) - o);
        dc_next[k] = dc * f;
      }
      dh_next.noalias() = U.transpose() * d_pre.col(t);
    }
    grads.tensors[grads.lstm_w(l)].noalias() += d_pre * tr.input.transpose();
    if (steps > 1) {
      grads.tensors[grads.lstm_u(l)].noalias() +=
          d_pre.rightCols(steps - 1) * tr.hidden.leftCols(steps - 1).transpose();
    }
    grads.tensors[grads.lstm_b(l)].col(0) += d_pre.rowwise().sum();
    if (l > 0) d_hidden.noalias() = params.tensors[params.lstm_w(l)].transpose() * d_pre;
  }
}

template <class S>
ParamSet<S> backward(const NetworkParams<S>& params, const ForwardTrace<S>& trace,
                     const Vec<S>& d_logits, S d_value) {
  auto grads = ParamSet<S>::zeros(params.shape);
  backward(params, trace, d_logits, d_value, grads);
  return grads;
}

// Samples an action index from a probability vector. Greedy mode returns the
// argmax with ties resolved to the lowest index.
template <class S>
int sample_action(const Vec<S>& policy, Rng& rng, bool greedy = false) {
  if (policy.size() < 1) throw ContractError("sample_action: empty policy");
  double total = 0.0;
  for (Eigen::Index i = 0; i < policy.size(); ++i) {
    const double p = static_cast<double>(policy[i]);
    if (!(p >= 0.0) || !std::isfinite(p)) throw ContractError("sample_action: invalid probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-5) throw ContractError("sample_action: policy is not normalized");
  if (greedy) {
    int best = 0;
    for (Eigen::Index i = 1; i < policy.size(); ++i) {
      if (policy[i] > policy[best]) best = static_cast<int>(i);
    }
    return best;
  }
  const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  double acc = 0.0;
  int last_positive = 0;
  for (Eigen::Index i = 0; i < policy.size(); ++i) {
    const double p = static_cast<double>(policy[i]);
    if (p > 0) last_positive = static_cast<int>(i);
    acc += p;
    if (u < acc) return static_cast<int>(i);
  }
  return last_positive;
}

}  // namespace uavchase
