#pragma once

// Reference implementations used only by the tests. They are written as
// direct loops over the defining sums, independent of the im2col/GEMM path.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "ecgr/numerics.hpp"

namespace oracle {

inline ecgr::FeatureMap random_map(std::size_t b, std::size_t c, std::size_t l, std::mt19937_64& rng,
                                   double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  ecgr::FeatureMap m(b, c, l);
  for (double& v : m.values()) v = u(rng);
  return m;
}

inline ecgr::KernelTensor random_kernel(std::size_t out, std::size_t in, std::size_t q, std::size_t k,
                                        std::mt19937_64& rng, double scale = 0.5) {
  std::uniform_real_distribution<double> u(-scale, scale);
  ecgr::KernelTensor w(out, in, q, k);
  for (double& v : w.weights) v = u(rng);
  return w;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double scale = 0.5) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// y[o,t] = b[o] + sum_i sum_r sum_q w[o,i,q,r] x[i, t s + r - p]^q
inline ecgr::FeatureMap generative_conv(const ecgr::FeatureMap& x, const ecgr::KernelTensor& w,
                                        const std::vector<double>& bias, const ecgr::ConvGeometry& g) {
  const long L = static_cast<long>(x.length());
  const long K = static_cast<long>(w.kernel_size);
  const long out_len = (L + 2 * static_cast<long>(g.padding) - K) / static_cast<long>(g.stride) + 1;
  ecgr::FeatureMap y(x.batch(), w.out_channels, static_cast<std::size_t>(out_len));
  for (std::size_t b = 0; b < x.batch(); ++b)
    for (std::size_t o = 0; o < w.out_channels; ++o)
      for (long t = 0; t < out_len; ++t) {
        double acc = bias.empty() ? 0.0 : bias[o];
        for (std::size_t i = 0; i < w.in_channels; ++i)
          for (long r = 0; r < K; ++r) {
            const long src = t * static_cast<long>(g.stride) + r - static_cast<long>(g.padding);
            if (src < 0 || src >= L) continue;
            const double xv = x(b, i, static_cast<std::size_t>(src));
            for (std::size_t q = 1; q <= w.q_order; ++q)
              acc += w.at(o, i, q, static_cast<std::size_t>(r)) * std::pow(xv, static_cast<double>(q));
          }
        y(b, o, static_cast<std::size_t>(t)) = acc;
      }
  return y;
}

// y[o, t s + r - p] += w[o,i,q,r] x[i,t]^q, output length (L-1)s - 2p + K + op.
inline ecgr::FeatureMap generative_tconv(const ecgr::FeatureMap& x, const ecgr::KernelTensor& w,
                                         const std::vector<double>& bias, const ecgr::ConvGeometry& g) {
  const long L = static_cast<long>(x.length());
  const long K = static_cast<long>(w.kernel_size);
  const long s = static_cast<long>(g.stride);
  const long p = static_cast<long>(g.padding);
  const long out_len = (L - 1) * s - 2 * p + K + static_cast<long>(g.output_padding);
  ecgr::FeatureMap y(x.batch(), w.out_channels, static_cast<std::size_t>(out_len));
  for (std::size_t b = 0; b < x.batch(); ++b)
    for (std::size_t o = 0; o < w.out_channels; ++o) {
      for (long t = 0; t < out_len; ++t) y(b, o, static_cast<std::size_t>(t)) = bias.empty() ? 0.0 : bias[o];
      for (std::size_t i = 0; i < w.in_channels; ++i)
        for (long t = 0; t < L; ++t)
          for (long r = 0; r < K; ++r) {
            const long dst = t * s + r - p;
            if (dst < 0 || dst >= out_len) continue;
            const double xv = x(b, i, static_cast<std::size_t>(t));
            for (std::size_t q = 1; q <= w.q_order; ++q)
              y(b, o, static_cast<std::size_t>(dst)) +=
                  w.at(o, i, q, static_cast<std::size_t>(r)) * std::pow(xv, static_cast<double>(q));
          }
    }
  return y;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Central difference of f with respect to v[i], step h.
inline double central_difference(std::vector<double>& v, std::size_t i, const std::function<double()>& f,
                                 double h = 1e-6) {
  const double keep = v[i];
  const double step = h * std::max(1.0, std::abs(keep));
  v[i] = keep + step;
  const double fp = f();
  v[i] = keep - step;
  const double fm = f();
  v[i] = keep;
  return (fp - fm) / (2.0 * step);
}

inline double rel_err(double a, double n, double floor = 1e-8) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

}  // namespace oracle

namespace oracle {

// Maximum one-to-one matching between truth and detections within tol
// samples (augmenting paths). Greedy matching can never beat this count.
inline std::size_t optimal_match_count(const std::vector<std::size_t>& detected,
                                       const std::vector<std::size_t>& truth, std::size_t tol) {
  std::vector<long> owner(detected.size(), -1);
  std::function<bool(std::size_t, std::vector<bool>&)> augment = [&](std::size_t t, std::vector<bool>& seen) {
    for (std::size_t d = 0; d < detected.size(); ++d) {
      const std::size_t gap = detected[d] > truth[t] ? detected[d] - truth[t] : truth[t] - detected[d];
      if (gap > tol || seen[d]) continue;
      seen[d] = true;
      if (owner[d] < 0 || augment(static_cast<std::size_t>(owner[d]), seen)) {
        owner[d] = static_cast<long>(t);
        return true;
      }
    }
    return false;
  };
  std::size_t n = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    std::vector<bool> seen(detected.size(), false);
    if (augment(t, seen)) ++n;
  }
  return n;
}

}  // namespace oracle
