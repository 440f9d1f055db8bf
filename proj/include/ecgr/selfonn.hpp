#pragma once

// Generative-neuron (Self-ONN) 1D layers. Each kernel tap applies a learned
// Q-term power series to its input sample, so one layer is Q ordinary
// convolutions over the element-wise powers x, x^2, ..., x^Q summed into a
// shared per-neuron bias. Q = 1 is a plain convolution layer.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ecgr/numerics.hpp"

namespace ecgr {

struct OperationalConvLayer {
  KernelTensor weights;       // (out, in, Q, K)
  std::vector<double> bias;   // one per output neuron
  ConvGeometry geometry;

  OperationalConvLayer() = default;
  OperationalConvLayer(std::size_t in, std::size_t out, std::size_t q_order, std::size_t kernel,
                       std::size_t stride, std::size_t padding);

  std::size_t in_channels() const { return weights.in_channels; }
  std::size_t out_channels() const { return weights.out_channels; }
  std::size_t q_order() const { return weights.q_order; }
  std::size_t kernel_size() const { return weights.kernel_size; }
  // K * Q * Cin * Cout + Cout
  std::size_t parameter_count() const { return weights.size() + bias.size(); }
};

struct OperationalTransposedConvLayer {
  KernelTensor weights;
  std::vector<double> bias;
  ConvGeometry geometry;  // output_padding is honoured here

  OperationalTransposedConvLayer() = default;
  OperationalTransposedConvLayer(std::size_t in, std::size_t out, std::size_t q_order,
                                 std::size_t kernel, std::size_t stride, std::size_t padding,
                                 std::size_t output_padding);

  std::size_t in_channels() const { return weights.in_channels; }
  std::size_t out_channels() const { return weights.out_channels; }
  std::size_t q_order() const { return weights.q_order; }
  std::size_t kernel_size() const { return weights.kernel_size; }
  std::size_t parameter_count() const { return weights.size() + bias.size(); }
};

struct LayerGrads {
  FeatureMap grad_x;
  KernelTensor grad_w;
  std::vector<double> grad_bias;
};

// Fan-in scaled uniform init: slice q draws from U(-a/q, a/q) with a = sqrt(3 / (Cin K)).
void initialize_layer(KernelTensor& weights, std::vector<double>& bias, std::mt19937_64& rng);

// Throws NumericError if the output is not finite.
FeatureMap op_forward(const OperationalConvLayer& layer, const FeatureMap& x);
LayerGrads op_backward(const OperationalConvLayer& layer, const FeatureMap& x,
                       const FeatureMap& grad_out);

FeatureMap op_tconv_forward(const OperationalTransposedConvLayer& layer, const FeatureMap& x);
LayerGrads op_tconv_backward(const OperationalTransposedConvLayer& layer, const FeatureMap& x,
                             const FeatureMap& grad_out);

namespace detail {

// Accumulating backward used by the networks. grad_w/grad_bias may be empty
// when req.params is false; the returned map is empty when req.input is false.
FeatureMap op_backward_into(const KernelTensor& weights, const ConvGeometry& g, bool transposed,
                            const FeatureMap& x, const FeatureMap& grad_out, GradRequest req,
                            std::span<double> grad_w, std::span<double> grad_bias);

}  // namespace detail

// ---------------------------------------------------------------------------
// Finite-difference gradient checking

struct GradCheckEntry {
  std::string parameter;  // "w", "bias" or "x"
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::vector<GradCheckEntry> worst;  // descending by rel_error, at most 5

  bool passed(double tolerance) const { return max_rel_error <= tolerance; }
};

// |a - n| / max(|a|, |n|, floor). The floor keeps coordinates whose true
// gradient is ~0 from dominating the report.
double relative_error(double analytic, double numeric, double floor = 1e-8);

// Central differences with step 1e-6 * max(1, |theta|) on `samples`
// coordinates of each of w, bias and the input, for the scalar
// L = <layer(x), u> with a fixed random probe u.
GradCheckReport grad_check(const OperationalConvLayer& layer, const FeatureMap& x,
                           std::size_t samples = 100, std::uint64_t seed = 7);
GradCheckReport grad_check(const OperationalTransposedConvLayer& layer, const FeatureMap& x,
                           std::size_t samples = 100, std::uint64_t seed = 7);

// Folds an entry into a report, keeping the five worst.
void record_check(GradCheckReport& report, GradCheckEntry entry);

}  // namespace ecgr
