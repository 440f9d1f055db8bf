#include "ecgr/selfonn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "ecgr/errors.hpp"

namespace ecgr {

OperationalConvLayer::OperationalConvLayer(std::size_t in, std::size_t out, std::size_t q_order,
                                           std::size_t kernel, std::size_t stride,
                                           std::size_t padding)
    : weights(out, in, q_order, kernel), bias(out, 0.0), geometry{stride, padding, 0} {
  if (stride < 1) throw ConfigError("OperationalConvLayer: stride must be >= 1");
}

OperationalTransposedConvLayer::OperationalTransposedConvLayer(std::size_t in, std::size_t out,
                                                               std::size_t q_order,
                                                               std::size_t kernel,
                                                               std::size_t stride,
                                                               std::size_t padding,
                                                               std::size_t output_padding)
    : weights(out, in, q_order, kernel), bias(out, 0.0), geometry{stride, padding, output_padding} {
  if (stride < 1) throw ConfigError("OperationalTransposedConvLayer: stride must be >= 1");
  if (output_padding >= stride)
    throw ConfigError("OperationalTransposedConvLayer: output_padding must be < stride");
}

void initialize_layer(KernelTensor& weights, std::vector<double>& bias, std::mt19937_64& rng) {
  const double fan_in = static_cast<double>(weights.in_channels * weights.kernel_size);
  const double bound = std::sqrt(3.0 / fan_in);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (std::size_t o = 0; o < weights.out_channels; ++o)
    for (std::size_t i = 0; i < weights.in_channels; ++i)
      for (std::size_t q = 1; q <= weights.q_order; ++q)
        for (std::size_t r = 0; r < weights.kernel_size; ++r)
          weights.at(o, i, q, r) = unit(rng) * bound / static_cast<double>(q);
  const double bias_bound = 1.0 / std::sqrt(fan_in);
  for (double& b : bias) b = unit(rng) * bias_bound;
}

namespace {

void check_finite(const FeatureMap& y, const char* op) {
  if (!y.all_finite())
    throw NumericError(std::string(op) +
                       ": non-finite output (input to the power terms is probably unbounded)");
}

void check_input(const KernelTensor& w, const FeatureMap& x, const char* op) {
  if (x.channels() != w.in_channels)
    throw ConfigError(std::string(op) + ": input has " + std::to_string(x.channels()) +
                      " channels, layer expects " + std::to_string(w.in_channels));
}

// grad_x[c] = sum_q q x_c^(q-1) grad_powers[c, q]
FeatureMap chain_powers(const FeatureMap& x, const FeatureMap& grad_powers, std::size_t q_order) {
  if (q_order == 1) return grad_powers;
  FeatureMap gx(x.batch(), x.channels(), x.length());
  const std::size_t length = x.length();
  std::vector<double> power(length);
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const double* xv = x.row(b, c).data();
      double* dst = gx.row(b, c).data();
      const double* g1 = grad_powers.row(b, c * q_order).data();
      std::copy_n(g1, length, dst);
      std::fill(power.begin(), power.end(), 1.0);
      for (std::size_t q = 2; q <= q_order; ++q) {
        const double* gq = grad_powers.row(b, c * q_order + q - 1).data();
        const double scale = static_cast<double>(q);
        for (std::size_t t = 0; t < length; ++t) {
          power[t] *= xv[t];  // x^(q-1)
          dst[t] += scale * power[t] * gq[t];
        }
      }
    }
  }
  return gx;
}

}  // namespace

FeatureMap op_forward(const OperationalConvLayer& layer, const FeatureMap& x) {
  check_input(layer.weights, x, "op_forward");
  FeatureMap y = layer.q_order() == 1
                     ? detail::conv_forward(x, detail::fused_view(layer.weights), layer.bias, layer.geometry)
                     : detail::conv_forward(power_expand(x, layer.q_order()),
                                            detail::fused_view(layer.weights), layer.bias, layer.geometry);
  check_finite(y, "op_forward");
  return y;
}

FeatureMap op_tconv_forward(const OperationalTransposedConvLayer& layer, const FeatureMap& x) {
  check_input(layer.weights, x, "op_tconv_forward");
  FeatureMap y = layer.q_order() == 1
                     ? detail::tconv_forward(x, detail::fused_view(layer.weights), layer.bias, layer.geometry)
                     : detail::tconv_forward(power_expand(x, layer.q_order()),
                                             detail::fused_view(layer.weights), layer.bias, layer.geometry);
  check_finite(y, "op_tconv_forward");
  return y;
}

namespace detail {

FeatureMap op_backward_into(const KernelTensor& weights, const ConvGeometry& g, bool transposed,
                            const FeatureMap& x, const FeatureMap& grad_out, GradRequest req,
                            std::span<double> grad_w, std::span<double> grad_bias) {
  check_input(weights, x, "op_backward");
  const std::size_t q_order = weights.q_order;
  const FeatureMap expanded = q_order == 1 ? FeatureMap{} : power_expand(x, q_order);
  const FeatureMap& input = q_order == 1 ? x : expanded;
  const BankView view = fused_view(weights);
  FeatureMap grad_powers =
      transposed ? tconv_backward(input, view, grad_out, g, req, grad_w, grad_bias)
                 : conv_backward(input, view, grad_out, g, req, grad_w, grad_bias);
  if (!req.input) return {};
  return chain_powers(x, grad_powers, q_order);
}

}  // namespace detail

namespace {

template <typename Layer>
LayerGrads backward_impl(const Layer& layer, const FeatureMap& x, const FeatureMap& grad_out,
                         bool transposed) {
  LayerGrads grads;
  grads.grad_w = KernelTensor(layer.out_channels(), layer.in_channels(), layer.q_order(),
                              layer.kernel_size());
  grads.grad_bias.assign(layer.out_channels(), 0.0);
  grads.grad_x = detail::op_backward_into(layer.weights, layer.geometry, transposed, x, grad_out, {},
                                          grads.grad_w.weights, grads.grad_bias);
  return grads;
}

}  // namespace

LayerGrads op_backward(const OperationalConvLayer& layer, const FeatureMap& x,
                       const FeatureMap& grad_out) {
  return backward_impl(layer, x, grad_out, false);
}

LayerGrads op_tconv_backward(const OperationalTransposedConvLayer& layer, const FeatureMap& x,
                             const FeatureMap& grad_out) {
  return backward_impl(layer, x, grad_out, true);
}

// ---------------------------------------------------------------------------
// Gradient checking

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

void record_check(GradCheckReport& report, GradCheckEntry entry) {
  ++report.checked;
  report.max_rel_error = std::max(report.max_rel_error, entry.rel_error);
  report.worst.push_back(std::move(entry));
  std::stable_sort(report.worst.begin(), report.worst.end(),
                   [](const auto& a, const auto& b) { return a.rel_error > b.rel_error; });
  if (report.worst.size() > 5) report.worst.resize(5);
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <typename Layer, typename Forward, typename Backward>
GradCheckReport grad_check_impl(const Layer& layer, const FeatureMap& x, std::size_t samples,
                                std::uint64_t seed, Forward forward, Backward backward) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  const FeatureMap y0 = forward(layer, x);
  FeatureMap probe(y0.batch(), y0.channels(), y0.length());
  for (double& v : probe.values()) v = unit(rng);
  const LayerGrads grads = backward(layer, x, probe);

  GradCheckReport report;
  auto check = [&](const std::string& name, std::span<double> values,
                   std::span<const double> analytic, const std::function<double()>& loss) {
    if (values.empty()) return;
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    const std::size_t n = std::min(samples, values.size());
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t idx = values.size() <= samples ? s : pick(rng);
      const double orig = values[idx];
      const double h = 1e-6 * std::max(1.0, std::abs(orig));
      values[idx] = orig + h;
      const double up = loss();
      values[idx] = orig - h;
      const double down = loss();
      values[idx] = orig;
      const double numeric = (up - down) / (2.0 * h);
      record_check(report, {name, idx, analytic[idx], numeric, relative_error(analytic[idx], numeric)});
    }
  };

  Layer work = layer;
  FeatureMap xin = x;
  auto loss = [&] { return dot(forward(work, xin).values(), probe.values()); };
  check("w", work.weights.weights, grads.grad_w.weights, loss);
  check("bias", work.bias, grads.grad_bias, loss);
  check("x", xin.values(), grads.grad_x.values(), loss);
  return report;
}

}  // namespace

GradCheckReport grad_check(const OperationalConvLayer& layer, const FeatureMap& x,
                           std::size_t samples, std::uint64_t seed) {
  return grad_check_impl(
      layer, x, samples, seed,
      [](const OperationalConvLayer& l, const FeatureMap& in) { return op_forward(l, in); },
      [](const OperationalConvLayer& l, const FeatureMap& in, const FeatureMap& g) {
        return op_backward(l, in, g);
      });
}

GradCheckReport grad_check(const OperationalTransposedConvLayer& layer, const FeatureMap& x,
                           std::size_t samples, std::uint64_t seed) {
  return grad_check_impl(
      layer, x, samples, seed,
      [](const OperationalTransposedConvLayer& l, const FeatureMap& in) { return op_tconv_forward(l, in); },
      [](const OperationalTransposedConvLayer& l, const FeatureMap& in, const FeatureMap& g) {
        return op_tconv_backward(l, in, g);
      });
}

}  // namespace ecgr
