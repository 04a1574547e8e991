#pragma once

// Reference computations written independently of the library code, used as
// expected values by the unit suites and the acceptance binary.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <vector>

#include "uavchase/channel.hpp"

namespace oracle {

// Log-distance path loss in dB.
inline double path_loss_db(double l0, double n, double d, double d0) {
  return l0 + 10.0 * n * std::log10(d / d0);
}

// Discounted return of rewards[t..] with bootstrap value after the last step,
// computed forward as a plain sum of gamma powers.
inline double discounted_sum(const std::vector<double>& rewards, std::size_t t, double bootstrap,
                             double gamma) {
  double g = 0.0;
  double w = 1.0;
  for (std::size_t k = t; k < rewards.size(); ++k) {
    g += w * rewards[k];
    w *= gamma;
  }
  return g + w * bootstrap;
}

// Nearest-rank percentile by counting: smallest sample value x such that at
// least p% of the samples are <= x.
inline int percentile_by_count(const std::vector<int>& v, double p) {
  int best = *std::max_element(v.begin(), v.end());
  for (int x : v) {
    const auto le = std::count_if(v.begin(), v.end(), [&](int y) { return y <= x; });
    if (100.0 * static_cast<double>(le) >= p * static_cast<double>(v.size()) - 1e-9) {
      best = std::min(best, x);
    }
  }
  return best;
}

// Rician K from second and fourth moments of the envelope:
// gamma = Var(r^2) / E[r^2]^2, K = sqrt(1-gamma) / (1 - sqrt(1-gamma)).
struct MomentK {
  double m2 = 0.0;
  double m4 = 0.0;
  std::uint64_t n = 0;

  void add(std::complex<double> h) {
    const double p = std::norm(h);
    m2 += p;
    m4 += p * p;
    ++n;
  }
  double mean_power() const { return m2 / static_cast<double>(n); }
  double k() const {
    const double e2 = m2 / static_cast<double>(n);
    const double e4 = m4 / static_cast<double>(n);
    const double g = (e4 - e2 * e2) / (e2 * e2);
    const double s = std::sqrt(1.0 - g);
    return s / (1.0 - s);
  }
};

// Normalized autocorrelation Re E[w(t) w*(t+k dt)] / E|w|^2 of a complex
// sequence for lags 0..max_lag.
inline std::vector<double> autocorrelation(const std::vector<std::complex<double>>& w,
                                           int max_lag) {
  std::vector<double> r(static_cast<std::size_t>(max_lag) + 1, 0.0);
  const std::size_t n = w.size() - static_cast<std::size_t>(max_lag);
  double p = 0.0;
  for (std::size_t t = 0; t < n; ++t) p += std::norm(w[t]);
  for (int k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) acc += (w[t] * std::conj(w[t + k])).real();
    r[k] = acc / p;
  }
  return r;
}

// Normalized complex correlation Re E[a b*] / sqrt(E|a|^2 E|b|^2).
inline double complex_correlation(const std::vector<std::complex<double>>& a,
                                  const std::vector<std::complex<double>>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    ab += (a[t] * std::conj(b[t])).real();
    aa += std::norm(a[t]);
    bb += std::norm(b[t]);
  }
  return ab / std::sqrt(aa * bb);
}

inline double bessel_j0(double x) { return std::cyl_bessel_j(0.0, x); }

// tau = M L / F + sum_d / v
inline double tracking_time(int m, int l, double f, double sum_d, double v) {
  return static_cast<double>(m) * static_cast<double>(l) / f + sum_d / v;
}

}  // namespace oracle
