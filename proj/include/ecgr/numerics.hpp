#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ecgr {

/**
 * Batch x channels x length tensor of doubles, stored row-major as
 * (batch, channel, sample). This is the only signal container the layers
 * exchange.
 */
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t batch, std::size_t channels, std::size_t length, double fill = 0.0);
  FeatureMap(std::size_t batch, std::size_t channels, std::size_t length, std::vector<double> data);

  std::size_t batch() const { return batch_; }
  std::size_t channels() const { return channels_; }
  std::size_t length() const { return length_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t b, std::size_t c, std::size_t t) {
    return data_[(b * channels_ + c) * length_ + t];
  }
  double operator()(std::size_t b, std::size_t c, std::size_t t) const {
    return data_[(b * channels_ + c) * length_ + t];
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  // All channels of one batch item.
  std::span<double> item(std::size_t b);
  std::span<const double> item(std::size_t b) const;
  std::span<double> row(std::size_t b, std::size_t c);
  std::span<const double> row(std::size_t b, std::size_t c) const;

  bool same_shape(const FeatureMap& other) const {
    return batch_ == other.batch_ && channels_ == other.channels_ && length_ == other.length_;
  }
  bool all_finite() const;

  FeatureMap& operator+=(const FeatureMap& other);

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t batch_ = 0;
  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  std::vector<double> data_;
};

// Stacks batch items of equal-shaped maps: (b1 + b2 + ..., C, L).
FeatureMap concat_batch(std::span<const FeatureMap> parts);
// Items [first, first + count) of a batch.
FeatureMap slice_batch(const FeatureMap& x, std::size_t first, std::size_t count);

/**
 * Learned coefficients of an operational layer, laid out as
 * (out_channels, in_channels, q_order, kernel_size). The slice at a fixed q is
 * an ordinary convolution kernel bank; q_order = 1 is a plain conv bank.
 */
struct KernelTensor {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t q_order = 1;
  std::size_t kernel_size = 0;
  std::vector<double> weights;

  KernelTensor() = default;
  KernelTensor(std::size_t out, std::size_t in, std::size_t q, std::size_t k);

  std::size_t size() const { return weights.size(); }

  // q is 1-based: q = 1 multiplies the input, q = 2 its square, ...
  double& at(std::size_t o, std::size_t i, std::size_t q, std::size_t r) {
    return weights[((o * in_channels + i) * q_order + (q - 1)) * kernel_size + r];
  }
  double at(std::size_t o, std::size_t i, std::size_t q, std::size_t r) const {
    return weights[((o * in_channels + i) * q_order + (q - 1)) * kernel_size + r];
  }

  // Conv bank (out, in, 1, K) holding the q-th slice.
  KernelTensor slice(std::size_t q) const;

  friend bool operator==(const KernelTensor&, const KernelTensor&) = default;
};

// Swaps the in/out channel roles of a q_order = 1 bank. A conv1d bank
// transposed this way is the tconv1d bank of its adjoint.
KernelTensor transpose_channels(const KernelTensor& w);

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t output_padding = 0;  // transposed convolution only
};

// floor((L + 2 padding - K) / stride) + 1; throws ConfigError when < 1.
std::size_t conv_output_length(std::size_t length, std::size_t kernel, const ConvGeometry& g);
// (L - 1) stride - 2 padding + K + output_padding; throws ConfigError when < 1.
std::size_t tconv_output_length(std::size_t length, std::size_t kernel, const ConvGeometry& g);

struct ConvGrads {
  FeatureMap grad_x;
  KernelTensor grad_w;
  std::vector<double> grad_bias;
};

// Cross-correlation with zero padding: y[o,t] = b[o] + sum_{i,r} w[o,i,r] x[i, t*s + r - p].
// `w` must have q_order = 1. An empty bias means zero bias.
FeatureMap conv1d(const FeatureMap& x, const KernelTensor& w, std::span<const double> bias,
                  const ConvGeometry& g);
ConvGrads conv1d_backward(const FeatureMap& x, const KernelTensor& w, const FeatureMap& grad_out,
                          const ConvGeometry& g);

// Scatter-add transposed convolution: y[o, t*s + r - p] += w[o,i,r] x[i,t].
FeatureMap tconv1d(const FeatureMap& x, const KernelTensor& w, std::span<const double> bias,
                   const ConvGeometry& g);
ConvGrads tconv1d_backward(const FeatureMap& x, const KernelTensor& w, const FeatureMap& grad_out,
                           const ConvGeometry& g);

// Channel c*Q + (q-1) of the result holds x_c^q. Plane q = 1 is a bitwise copy of x.
FeatureMap power_expand(const FeatureMap& x, std::size_t q_order);
// Extracts the (B, C, L) plane of power q from a power_expand result.
FeatureMap power_plane(const FeatureMap& stacked, std::size_t q_order, std::size_t q);

FeatureMap tanh_act(const FeatureMap& x);
void tanh_inplace(FeatureMap& x);
// grad_x = grad_y * (1 - y^2), using the activation output y.
FeatureMap tanh_backward(const FeatureMap& y, const FeatureMap& grad_y);

struct AdamState {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  AdamState() = default;
  AdamState(std::size_t parameter_count, double learning_rate);
};

// One bias-corrected Adam update over a parameter set split into blocks.
// The blocks are treated as one flat vector in the given order.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state);
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

namespace detail {

// Conv bank view with in-channels already fused over the power planes.
struct BankView {
  std::size_t out = 0;
  std::size_t in = 0;
  std::size_t kernel = 0;
  std::span<const double> w;
};

inline BankView fused_view(const KernelTensor& k) {
  return {k.out_channels, k.in_channels * k.q_order, k.kernel_size, k.weights};
}

struct GradRequest {
  bool input = true;
  bool params = true;
};

FeatureMap conv_forward(const FeatureMap& x, const BankView& w, std::span<const double> bias,
                        const ConvGeometry& g);
// grad_w/grad_bias are accumulated (+=) when requested; returns grad_x (empty if not requested).
FeatureMap conv_backward(const FeatureMap& x, const BankView& w, const FeatureMap& grad_out,
                         const ConvGeometry& g, GradRequest req, std::span<double> grad_w,
                         std::span<double> grad_bias);
FeatureMap tconv_forward(const FeatureMap& x, const BankView& w, std::span<const double> bias,
                         const ConvGeometry& g);
FeatureMap tconv_backward(const FeatureMap& x, const BankView& w, const FeatureMap& grad_out,
                          const ConvGeometry& g, GradRequest req, std::span<double> grad_w,
                          std::span<double> grad_bias);

}  // namespace detail
}  // namespace ecgr
