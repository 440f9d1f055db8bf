#include "ecgr/numerics.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "ecgr/errors.hpp"

namespace ecgr {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

std::string shape_str(const FeatureMap& x) {
  return "(" + std::to_string(x.batch()) + "," + std::to_string(x.channels()) + "," +
         std::to_string(x.length()) + ")";
}

// Valid output positions t with 0 <= t*s + r - p < length.
struct TapRange {
  std::size_t lo;
  std::size_t hi;  // exclusive
};

TapRange tap_range(std::size_t r, std::size_t length, std::size_t positions, const ConvGeometry& g) {
  const std::size_t s = g.stride;
  const std::size_t p = g.padding;
  std::size_t lo = 0;
  if (p > r) lo = (p - r + s - 1) / s;
  // t*s + r - p < length  <=>  t*s < length + p - r
  std::size_t hi = 0;
  if (length + p > r) hi = (length + p - r + s - 1) / s;
  hi = std::min(hi, positions);
  if (lo > hi) lo = hi;
  return {lo, hi};
}

// col[(c*K + r), b*positions + t] = x[b, c, t*s + r - p]
void im2col(const FeatureMap& x, std::size_t kernel, const ConvGeometry& g, std::size_t positions,
            std::vector<double>& col) {
  const std::size_t batch = x.batch(), channels = x.channels(), length = x.length();
  const std::size_t ld = batch * positions;
  col.assign(channels * kernel * ld, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t r = 0; r < kernel; ++r) {
      const TapRange range = tap_range(r, length, positions, g);
      double* dst = col.data() + (c * kernel + r) * ld;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* src = x.row(b, c).data();
        double* out = dst + b * positions;
        if (g.stride == 1) {
          const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(r) - static_cast<std::ptrdiff_t>(g.padding);
          for (std::size_t t = range.lo; t < range.hi; ++t) out[t] = src[static_cast<std::ptrdiff_t>(t) + shift];
        } else {
          for (std::size_t t = range.lo; t < range.hi; ++t) out[t] = src[t * g.stride + r - g.padding];
        }
      }
    }
  }
}

// Adjoint of im2col: y[b, c, t*s + r - p] += col[(c*K + r), b*positions + t]
void col2im_add(const double* col, std::size_t kernel, const ConvGeometry& g, std::size_t positions,
                FeatureMap& y) {
  const std::size_t batch = y.batch(), channels = y.channels(), length = y.length();
  const std::size_t ld = batch * positions;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t r = 0; r < kernel; ++r) {
      const TapRange range = tap_range(r, length, positions, g);
      const double* src = col + (c * kernel + r) * ld;
      for (std::size_t b = 0; b < batch; ++b) {
        double* dst = y.row(b, c).data();
        const double* in = src + b * positions;
        for (std::size_t t = range.lo; t < range.hi; ++t) dst[t * g.stride + r - g.padding] += in[t];
      }
    }
  }
}

// X[c, b*L + t] = x[b, c, t]
std::vector<double> gather_channels(const FeatureMap& x) {
  const std::size_t batch = x.batch(), channels = x.channels(), length = x.length();
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t b = 0; b < batch; ++b)
      std::copy_n(x.row(b, c).data(), length, out.data() + (c * batch + b) * length);
  return out;
}

void scatter_channels(const double* src, FeatureMap& y) {
  const std::size_t batch = y.batch(), channels = y.channels(), length = y.length();
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t b = 0; b < batch; ++b)
      std::copy_n(src + (c * batch + b) * length, length, y.row(b, c).data());
}

void check_bank(const FeatureMap& x, const detail::BankView& w, std::span<const double> bias,
                const char* op) {
  if (x.channels() != w.in)
    throw ConfigError(std::string(op) + ": input " + shape_str(x) + " has " +
                      std::to_string(x.channels()) + " channels, kernel expects " +
                      std::to_string(w.in));
  if (w.kernel == 0 || w.w.size() != w.out * w.in * w.kernel)
    throw ConfigError(std::string(op) + ": malformed kernel bank");
  if (!bias.empty() && bias.size() != w.out)
    throw ConfigError(std::string(op) + ": bias size does not match out channels");
}

void add_bias(FeatureMap& y, std::span<const double> bias) {
  if (bias.empty()) return;
  for (std::size_t b = 0; b < y.batch(); ++b)
    for (std::size_t o = 0; o < y.channels(); ++o) {
      auto row = y.row(b, o);
      for (double& v : row) v += bias[o];
    }
}

void accumulate_bias_grad(const FeatureMap& grad_out, std::span<double> grad_bias) {
  for (std::size_t b = 0; b < grad_out.batch(); ++b)
    for (std::size_t o = 0; o < grad_out.channels(); ++o) {
      double s = 0.0;
      for (double v : grad_out.row(b, o)) s += v;
      grad_bias[o] += s;
    }
}

// P[c, o*K + r] = w[o, c, r]
std::vector<double> pack_transposed(const detail::BankView& w) {
  std::vector<double> packed(w.w.size());
  for (std::size_t o = 0; o < w.out; ++o)
    for (std::size_t c = 0; c < w.in; ++c)
      for (std::size_t r = 0; r < w.kernel; ++r)
        packed[c * w.out * w.kernel + o * w.kernel + r] = w.w[(o * w.in + c) * w.kernel + r];
  return packed;
}

}  // namespace

// ---------------------------------------------------------------------------
// FeatureMap

FeatureMap::FeatureMap(std::size_t batch, std::size_t channels, std::size_t length, double fill)
    : batch_(batch), channels_(channels), length_(length), data_(batch * channels * length, fill) {}

FeatureMap::FeatureMap(std::size_t batch, std::size_t channels, std::size_t length,
                       std::vector<double> data)
    : batch_(batch), channels_(channels), length_(length), data_(std::move(data)) {
  if (data_.size() != batch * channels * length)
    throw ConfigError("FeatureMap: data size " + std::to_string(data_.size()) +
                      " does not match shape");
}

std::span<double> FeatureMap::item(std::size_t b) {
  return std::span<double>(data_).subspan(b * channels_ * length_, channels_ * length_);
}
std::span<const double> FeatureMap::item(std::size_t b) const {
  return std::span<const double>(data_).subspan(b * channels_ * length_, channels_ * length_);
}
std::span<double> FeatureMap::row(std::size_t b, std::size_t c) {
  return std::span<double>(data_).subspan((b * channels_ + c) * length_, length_);
}
std::span<const double> FeatureMap::row(std::size_t b, std::size_t c) const {
  return std::span<const double>(data_).subspan((b * channels_ + c) * length_, length_);
}

bool FeatureMap::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

FeatureMap& FeatureMap::operator+=(const FeatureMap& other) {
  if (!same_shape(other))
    throw ConfigError("FeatureMap +=: shape " + shape_str(*this) + " vs " + shape_str(other));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

FeatureMap concat_batch(std::span<const FeatureMap> parts) {
  if (parts.empty()) return {};
  std::size_t batch = 0;
  for (const auto& p : parts) {
    if (p.channels() != parts[0].channels() || p.length() != parts[0].length())
      throw ConfigError("concat_batch: mismatched item shapes");
    batch += p.batch();
  }
  std::vector<double> data;
  data.reserve(batch * parts[0].channels() * parts[0].length());
  for (const auto& p : parts) data.insert(data.end(), p.storage().begin(), p.storage().end());
  return FeatureMap(batch, parts[0].channels(), parts[0].length(), std::move(data));
}

FeatureMap slice_batch(const FeatureMap& x, std::size_t first, std::size_t count) {
  if (first + count > x.batch()) throw ConfigError("slice_batch: range exceeds batch");
  const std::size_t stride = x.channels() * x.length();
  auto begin = x.storage().begin() + static_cast<std::ptrdiff_t>(first * stride);
  return FeatureMap(count, x.channels(), x.length(),
                    std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count * stride)));
}

// ---------------------------------------------------------------------------
// KernelTensor

KernelTensor::KernelTensor(std::size_t out, std::size_t in, std::size_t q, std::size_t k)
    : out_channels(out), in_channels(in), q_order(q), kernel_size(k), weights(out * in * q * k, 0.0) {
  if (q < 1) throw ConfigError("KernelTensor: q_order must be >= 1");
  if (k < 1) throw ConfigError("KernelTensor: kernel_size must be >= 1");
}

KernelTensor KernelTensor::slice(std::size_t q) const {
  if (q < 1 || q > q_order) throw ConfigError("KernelTensor::slice: q out of range");
  KernelTensor s(out_channels, in_channels, 1, kernel_size);
  for (std::size_t o = 0; o < out_channels; ++o)
    for (std::size_t i = 0; i < in_channels; ++i)
      for (std::size_t r = 0; r < kernel_size; ++r) s.at(o, i, 1, r) = at(o, i, q, r);
  return s;
}

KernelTensor transpose_channels(const KernelTensor& w) {
  if (w.q_order != 1) throw ConfigError("transpose_channels: expects q_order = 1");
  KernelTensor t(w.in_channels, w.out_channels, 1, w.kernel_size);
  for (std::size_t o = 0; o < w.out_channels; ++o)
    for (std::size_t i = 0; i < w.in_channels; ++i)
      for (std::size_t r = 0; r < w.kernel_size; ++r) t.at(i, o, 1, r) = w.at(o, i, 1, r);
  return t;
}

// ---------------------------------------------------------------------------
// Length rules

std::size_t conv_output_length(std::size_t length, std::size_t kernel, const ConvGeometry& g) {
  if (g.stride < 1) throw ConfigError("conv: stride must be >= 1");
  const long long span = static_cast<long long>(length) + 2 * static_cast<long long>(g.padding) -
                         static_cast<long long>(kernel);
  if (span < 0)
    throw ConfigError("conv: non-positive output length for input length " + std::to_string(length) +
                      ", kernel " + std::to_string(kernel));
  return static_cast<std::size_t>(span) / g.stride + 1;
}

std::size_t tconv_output_length(std::size_t length, std::size_t kernel, const ConvGeometry& g) {
  if (g.stride < 1) throw ConfigError("tconv: stride must be >= 1");
  if (length < 1) throw ConfigError("tconv: empty input");
  const long long out = (static_cast<long long>(length) - 1) * static_cast<long long>(g.stride) -
                        2 * static_cast<long long>(g.padding) + static_cast<long long>(kernel) +
                        static_cast<long long>(g.output_padding);
  if (out < 1)
    throw ConfigError("tconv: non-positive output length for input length " + std::to_string(length));
  return static_cast<std::size_t>(out);
}

// ---------------------------------------------------------------------------
// Fused kernels

namespace detail {

FeatureMap conv_forward(const FeatureMap& x, const BankView& w, std::span<const double> bias,
                        const ConvGeometry& g) {
  check_bank(x, w, bias, "conv1d");
  const std::size_t lout = conv_output_length(x.length(), w.kernel, g);
  const std::size_t ld = x.batch() * lout;

  std::vector<double> col;
  im2col(x, w.kernel, g, lout, col);

  std::vector<double> y(w.out * ld);
  MatrixMap(y.data(), static_cast<Eigen::Index>(w.out), static_cast<Eigen::Index>(ld)).noalias() =
      ConstMatrixMap(w.w.data(), static_cast<Eigen::Index>(w.out), static_cast<Eigen::Index>(w.in * w.kernel)) *
      ConstMatrixMap(col.data(), static_cast<Eigen::Index>(w.in * w.kernel), static_cast<Eigen::Index>(ld));

  FeatureMap out(x.batch(), w.out, lout);
  scatter_channels(y.data(), out);
  add_bias(out, bias);
  return out;
}

FeatureMap conv_backward(const FeatureMap& x, const BankView& w, const FeatureMap& grad_out,
                         const ConvGeometry& g, GradRequest req, std::span<double> grad_w,
                         std::span<double> grad_bias) {
  check_bank(x, w, {}, "conv1d_backward");
  const std::size_t lout = conv_output_length(x.length(), w.kernel, g);
  if (grad_out.batch() != x.batch() || grad_out.channels() != w.out || grad_out.length() != lout)
    throw ConfigError("conv1d_backward: grad_out shape " + shape_str(grad_out) +
                      " does not match forward output");
  const std::size_t ld = x.batch() * lout;
  const auto rows = static_cast<Eigen::Index>(w.in * w.kernel);
  const std::vector<double> gy = gather_channels(grad_out);
  ConstMatrixMap gmat(gy.data(), static_cast<Eigen::Index>(w.out), static_cast<Eigen::Index>(ld));

  if (req.params) {
    if (grad_w.size() != w.w.size() || grad_bias.size() != w.out)
      throw ConfigError("conv1d_backward: gradient buffers have the wrong size");
    std::vector<double> col;
    im2col(x, w.kernel, g, lout, col);
    MatrixMap(grad_w.data(), static_cast<Eigen::Index>(w.out), rows).noalias() +=
        gmat * ConstMatrixMap(col.data(), rows, static_cast<Eigen::Index>(ld)).transpose();
    accumulate_bias_grad(grad_out, grad_bias);
  }

  FeatureMap grad_x;
  if (req.input) {
    std::vector<double> dcol(static_cast<std::size_t>(rows) * ld);
    MatrixMap(dcol.data(), rows, static_cast<Eigen::Index>(ld)).noalias() =
        ConstMatrixMap(w.w.data(), static_cast<Eigen::Index>(w.out), rows).transpose() * gmat;
    grad_x = FeatureMap(x.batch(), x.channels(), x.length());
    col2im_add(dcol.data(), w.kernel, g, lout, grad_x);
  }
  return grad_x;
}

FeatureMap tconv_forward(const FeatureMap& x, const BankView& w, std::span<const double> bias,
                         const ConvGeometry& g) {
  check_bank(x, w, bias, "tconv1d");
  const std::size_t lout = tconv_output_length(x.length(), w.kernel, g);
  const std::size_t positions = x.length();
  const std::size_t ld = x.batch() * positions;
  const auto cols_rows = static_cast<Eigen::Index>(w.out * w.kernel);

  const std::vector<double> packed = pack_transposed(w);
  const std::vector<double> xm = gather_channels(x);
  std::vector<double> cols(static_cast<std::size_t>(cols_rows) * ld);
  MatrixMap(cols.data(), cols_rows, static_cast<Eigen::Index>(ld)).noalias() =
      ConstMatrixMap(packed.data(), static_cast<Eigen::Index>(w.in), cols_rows).transpose() *
      ConstMatrixMap(xm.data(), static_cast<Eigen::Index>(w.in), static_cast<Eigen::Index>(ld));

  FeatureMap out(x.batch(), w.out, lout);
  col2im_add(cols.data(), w.kernel, g, positions, out);
  add_bias(out, bias);
  return out;
}

FeatureMap tconv_backward(const FeatureMap& x, const BankView& w, const FeatureMap& grad_out,
                          const ConvGeometry& g, GradRequest req, std::span<double> grad_w,
                          std::span<double> grad_bias) {
  check_bank(x, w, {}, "tconv1d_backward");
  const std::size_t lout = tconv_output_length(x.length(), w.kernel, g);
  if (grad_out.batch() != x.batch() || grad_out.channels() != w.out || grad_out.length() != lout)
    throw ConfigError("tconv1d_backward: grad_out shape " + shape_str(grad_out) +
                      " does not match forward output");
  const std::size_t positions = x.length();
  const std::size_t ld = x.batch() * positions;
  const auto cols_rows = static_cast<Eigen::Index>(w.out * w.kernel);

  std::vector<double> dcols;
  im2col(grad_out, w.kernel, g, positions, dcols);
  ConstMatrixMap dmat(dcols.data(), cols_rows, static_cast<Eigen::Index>(ld));

  if (req.params) {
    if (grad_w.size() != w.w.size() || grad_bias.size() != w.out)
      throw ConfigError("tconv1d_backward: gradient buffers have the wrong size");
    const std::vector<double> xm = gather_channels(x);
    RowMatrix dpacked = ConstMatrixMap(xm.data(), static_cast<Eigen::Index>(w.in),
                                       static_cast<Eigen::Index>(ld)) *
                        dmat.transpose();
    for (std::size_t o = 0; o < w.out; ++o)
      for (std::size_t c = 0; c < w.in; ++c)
        for (std::size_t r = 0; r < w.kernel; ++r)
          grad_w[(o * w.in + c) * w.kernel + r] +=
              dpacked(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(o * w.kernel + r));
    accumulate_bias_grad(grad_out, grad_bias);
  }

  FeatureMap grad_x;
  if (req.input) {
    const std::vector<double> packed = pack_transposed(w);
    std::vector<double> dx(w.in * ld);
    MatrixMap(dx.data(), static_cast<Eigen::Index>(w.in), static_cast<Eigen::Index>(ld)).noalias() =
        ConstMatrixMap(packed.data(), static_cast<Eigen::Index>(w.in), cols_rows) * dmat;
    grad_x = FeatureMap(x.batch(), x.channels(), x.length());
    scatter_channels(dx.data(), grad_x);
  }
  return grad_x;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public convolution API

namespace {
void require_plain_bank(const KernelTensor& w, const char* op) {
  if (w.q_order != 1)
    throw ConfigError(std::string(op) + ": expects a plain bank (q_order = 1); got q_order " +
                      std::to_string(w.q_order));
}
}  // namespace

FeatureMap conv1d(const FeatureMap& x, const KernelTensor& w, std::span<const double> bias,
                  const ConvGeometry& g) {
  require_plain_bank(w, "conv1d");
  return detail::conv_forward(x, detail::fused_view(w), bias, g);
}

ConvGrads conv1d_backward(const FeatureMap& x, const KernelTensor& w, const FeatureMap& grad_out,
                          const ConvGeometry& g) {
  require_plain_bank(w, "conv1d_backward");
  ConvGrads grads;
  grads.grad_w = KernelTensor(w.out_channels, w.in_channels, 1, w.kernel_size);
  grads.grad_bias.assign(w.out_channels, 0.0);
  grads.grad_x = detail::conv_backward(x, detail::fused_view(w), grad_out, g, {}, grads.grad_w.weights,
                                       grads.grad_bias);
  return grads;
}

FeatureMap tconv1d(const FeatureMap& x, const KernelTensor& w, std::span<const double> bias,
                   const ConvGeometry& g) {
  require_plain_bank(w, "tconv1d");
  return detail::tconv_forward(x, detail::fused_view(w), bias, g);
}

ConvGrads tconv1d_backward(const FeatureMap& x, const KernelTensor& w, const FeatureMap& grad_out,
                           const ConvGeometry& g) {
  require_plain_bank(w, "tconv1d_backward");
  ConvGrads grads;
  grads.grad_w = KernelTensor(w.out_channels, w.in_channels, 1, w.kernel_size);
  grads.grad_bias.assign(w.out_channels, 0.0);
  grads.grad_x = detail::tconv_backward(x, detail::fused_view(w), grad_out, g, {}, grads.grad_w.weights,
                                        grads.grad_bias);
  return grads;
}

// ---------------------------------------------------------------------------
// Elementwise

FeatureMap power_expand(const FeatureMap& x, std::size_t q_order) {
  if (q_order < 1) throw ConfigError("power_expand: Q must be >= 1");
  const std::size_t length = x.length();
  FeatureMap out(x.batch(), x.channels() * q_order, length);
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const auto src = x.row(b, c);
      std::copy(src.begin(), src.end(), out.row(b, c * q_order).begin());
      for (std::size_t q = 1; q < q_order; ++q) {
        const double* prev = out.row(b, c * q_order + q - 1).data();
        double* dst = out.row(b, c * q_order + q).data();
        for (std::size_t t = 0; t < length; ++t) dst[t] = prev[t] * src[t];
      }
    }
  }
  return out;
}

FeatureMap power_plane(const FeatureMap& stacked, std::size_t q_order, std::size_t q) {
  if (q < 1 || q > q_order || stacked.channels() % q_order != 0)
    throw ConfigError("power_plane: bad plane index or stacked shape");
  const std::size_t channels = stacked.channels() / q_order;
  FeatureMap out(stacked.batch(), channels, stacked.length());
  for (std::size_t b = 0; b < stacked.batch(); ++b)
    for (std::size_t c = 0; c < channels; ++c) {
      const auto src = stacked.row(b, c * q_order + q - 1);
      std::copy(src.begin(), src.end(), out.row(b, c).begin());
    }
  return out;
}

void tanh_inplace(FeatureMap& x) {
  for (double& v : x.values()) v = std::tanh(v);
}

FeatureMap tanh_act(const FeatureMap& x) {
  FeatureMap y = x;
  tanh_inplace(y);
  return y;
}

FeatureMap tanh_backward(const FeatureMap& y, const FeatureMap& grad_y) {
  if (!y.same_shape(grad_y)) throw ConfigError("tanh_backward: shape mismatch");
  FeatureMap g(y.batch(), y.channels(), y.length());
  const auto yv = y.values();
  const auto gy = grad_y.values();
  auto gv = g.values();
  for (std::size_t i = 0; i < gv.size(); ++i) gv[i] = gy[i] * (1.0 - yv[i] * yv[i]);
  return g;
}

// ---------------------------------------------------------------------------
// Adam

AdamState::AdamState(std::size_t parameter_count, double learning_rate)
    : lr(learning_rate), first_moment(parameter_count, 0.0), second_moment(parameter_count, 0.0) {}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state) {
  if (params.size() != grads.size()) throw ConfigError("adam_step: block count mismatch");
  std::size_t total = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size()) throw ConfigError("adam_step: block size mismatch");
    total += params[i].size();
  }
  if (total != state.first_moment.size() || total != state.second_moment.size())
    throw ConfigError("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                      " parameters, got " + std::to_string(total));

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  std::size_t k = 0;
  for (std::size_t blk = 0; blk < params.size(); ++blk) {
    auto p = params[blk];
    auto g = grads[blk];
    for (std::size_t i = 0; i < p.size(); ++i, ++k) {
      double& m = state.first_moment[k];
      double& v = state.second_moment[k];
      m = state.beta1 * m + (1.0 - state.beta1) * g[i];
      v = state.beta2 * v + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m / c1;
      const double vhat = v / c2;
      p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  const std::span<double> p[1] = {params};
  const std::span<const double> g[1] = {grads};
  adam_step(std::span<const std::span<double>>(p), std::span<const std::span<const double>>(g), state);
}

}  // namespace ecgr
