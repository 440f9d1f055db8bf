#include "ecgr/models.hpp"

#include <random>

#include "ecgr/errors.hpp"

namespace ecgr {

// ---------------------------------------------------------------------------
// Configs

std::size_t GeneratorConfig::length_multiple() const {
  std::size_t m = 1;
  for (std::size_t i = 0; i < encoder_channels.size(); ++i) m *= stride;
  return m;
}

void GeneratorConfig::validate() const {
  if (q_order < 1) throw ConfigError("generator: q_order must be >= 1");
  if (encoder_channels.empty()) throw ConfigError("generator: needs at least one encoder layer");
  if (stride != 2) throw ConfigError("generator: only stride 2 keeps the skip shapes aligned");
  if (kernel_size < 2 || final_kernel_size < 2) throw ConfigError("generator: kernel sizes must be >= 2");
  for (std::size_t c : encoder_channels)
    if (c == 0) throw ConfigError("generator: zero-width layer");
  // Halving needs 2p - K in {-2, -1}; doubling needs output_padding in {0, 1}.
  for (std::size_t k : {kernel_size, final_kernel_size}) {
    const long long op = 2 + 2 * static_cast<long long>((k - 1) / 2) - static_cast<long long>(k);
    if (op < 0 || op > 1) throw ConfigError("generator: kernel size " + std::to_string(k) + " cannot double length");
  }
}

void DiscriminatorConfig::validate() const {
  if (q_order < 1) throw ConfigError("discriminator: q_order must be >= 1");
  if (strides.size() != layer_count())
    throw ConfigError("discriminator: need one stride per layer (" + std::to_string(layer_count()) + ")");
  for (std::size_t s : strides)
    if (s < 1) throw ConfigError("discriminator: stride must be >= 1");
  for (std::size_t c : channels)
    if (c == 0) throw ConfigError("discriminator: zero-width layer");
  if (kernel_size < 1) throw ConfigError("discriminator: kernel size must be >= 1");
}

std::size_t DiscriminatorConfig::output_length(std::size_t input_length) const {
  std::size_t length = input_length;
  for (std::size_t s : strides) length = conv_output_length(length, kernel_size, {s, padding, 0});
  return length;
}

GeneratorConfig wide_generator_preset(std::size_t q_order) {
  GeneratorConfig cfg;
  cfg.q_order = q_order;
  for (auto& c : cfg.encoder_channels) c *= 4;
  return cfg;
}

DiscriminatorConfig wide_discriminator_preset(std::size_t q_order) {
  DiscriminatorConfig cfg;
  cfg.q_order = q_order;
  for (auto& c : cfg.channels) c *= 4;
  return cfg;
}

// ---------------------------------------------------------------------------
// GradientSet

void GradientSet::zero() {
  for (auto& b : blocks) std::fill(b.begin(), b.end(), 0.0);
}

std::vector<std::span<const double>> GradientSet::views() const {
  std::vector<std::span<const double>> v;
  v.reserve(blocks.size());
  for (const auto& b : blocks) v.emplace_back(b);
  return v;
}

double GradientSet::squared_norm() const {
  double s = 0.0;
  for (const auto& b : blocks)
    for (double g : b) s += g * g;
  return s;
}

namespace {

template <typename Layer>
void append_blocks(std::vector<ParameterBlock>& out, const std::string& name, Layer& layer) {
  out.push_back({name + ".weight", layer.weights.weights});
  out.push_back({name + ".bias", layer.bias});
}

template <typename Layer>
void append_views(std::vector<std::span<const double>>& out, const Layer& layer) {
  out.emplace_back(layer.weights.weights);
  out.emplace_back(layer.bias);
}

GradientSet gradients_like(const std::vector<std::span<const double>>& views) {
  GradientSet g;
  g.blocks.reserve(views.size());
  for (const auto& v : views) g.blocks.emplace_back(v.size(), 0.0);
  return g;
}

std::span<double> block(GradientSet* grads, std::size_t i) {
  if (grads == nullptr) return {};
  return grads->blocks.at(i);
}

}  // namespace

// ---------------------------------------------------------------------------
// Generator

Generator::Generator(GeneratorConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t k = cfg_.kernel_size;
  const std::size_t pad = (k - 1) / 2;
  std::size_t in = cfg_.input_channels;
  for (std::size_t width : cfg_.encoder_channels) {
    encoder_.emplace_back(in, width, cfg_.q_order, k, cfg_.stride, pad);
    in = width;
  }
  const std::size_t levels = cfg_.encoder_channels.size();
  for (std::size_t j = 0; j < levels; ++j) {
    const bool last = j + 1 == levels;
    const std::size_t out = last ? cfg_.input_channels : cfg_.encoder_channels[levels - 2 - j];
    const std::size_t kk = last ? cfg_.final_kernel_size : k;
    const std::size_t p = (kk - 1) / 2;
    const std::size_t op = 2 + 2 * p - kk;
    decoder_.emplace_back(in, out, cfg_.q_order, kk, cfg_.stride, p, op);
    in = out;
  }
  for (auto& l : encoder_) initialize_layer(l.weights, l.bias, rng);
  for (auto& l : decoder_) initialize_layer(l.weights, l.bias, rng);
}

void Generator::check_input(const FeatureMap& x) const {
  if (x.channels() != cfg_.input_channels)
    throw ConfigError("generator: expected " + std::to_string(cfg_.input_channels) +
                      " input channel(s), got " + std::to_string(x.channels()));
  const std::size_t m = cfg_.length_multiple();
  if (x.length() == 0 || x.length() % m != 0)
    throw ConfigError("generator: input length " + std::to_string(x.length()) +
                      " is not a positive multiple of " + std::to_string(m));
}

FeatureMap Generator::forward(const FeatureMap& x) const {
  GeneratorTrace trace;
  return forward(x, trace);
}

FeatureMap Generator::forward(const FeatureMap& x, GeneratorTrace& trace) const {
  check_input(x);
  trace.input = x;
  trace.encoder.clear();
  trace.decoder.clear();
  const FeatureMap* h = &trace.input;
  for (const auto& layer : encoder_) {
    FeatureMap z = op_forward(layer, *h);
    tanh_inplace(z);
    trace.encoder.push_back(std::move(z));
    h = &trace.encoder.back();
  }
  const std::size_t levels = encoder_.size();
  for (std::size_t j = 0; j < levels; ++j) {
    FeatureMap z = op_tconv_forward(decoder_[j], *h);
    if (j + 1 < levels) z += trace.encoder[levels - 2 - j];
    tanh_inplace(z);
    trace.decoder.push_back(std::move(z));
    h = &trace.decoder.back();
  }
  return trace.decoder.back();
}

FeatureMap Generator::backward(const GeneratorTrace& trace, const FeatureMap& grad_output,
                               GradientSet* grads, bool need_input_grad) const {
  const std::size_t levels = encoder_.size();
  if (trace.decoder.size() != levels || trace.encoder.size() != levels)
    throw ConfigError("generator backward: trace does not belong to this network");
  if (!grad_output.same_shape(trace.decoder.back()))
    throw ConfigError("generator backward: gradient shape does not match the output");
  const detail::GradRequest params_only{false, grads != nullptr};

  // Skip contributions into encoder outputs (post-activation).
  std::vector<FeatureMap> enc_grad(levels);

  FeatureMap g = grad_output;
  for (std::size_t jj = levels; jj-- > 0;) {
    FeatureMap gz = tanh_backward(trace.decoder[jj], g);
    if (jj + 1 < levels) enc_grad[levels - 2 - jj] = gz;
    const FeatureMap& in = jj == 0 ? trace.encoder.back() : trace.decoder[jj - 1];
    const std::size_t bi = 2 * (levels + jj);
    g = detail::op_backward_into(decoder_[jj].weights, decoder_[jj].geometry, true, in, gz,
                                 {true, params_only.params}, block(grads, bi), block(grads, bi + 1));
  }
  // g is now dL/d(encoder.back())
  for (std::size_t l = levels; l-- > 0;) {
    if (l + 1 < levels) g += enc_grad[l];
    FeatureMap gz = tanh_backward(trace.encoder[l], g);
    const FeatureMap& in = l == 0 ? trace.input : trace.encoder[l - 1];
    const bool want_input = l > 0 || need_input_grad;
    g = detail::op_backward_into(encoder_[l].weights, encoder_[l].geometry, false, in, gz,
                                 {want_input, params_only.params}, block(grads, 2 * l),
                                 block(grads, 2 * l + 1));
  }
  return need_input_grad ? g : FeatureMap{};
}

std::vector<ParameterBlock> Generator::parameters() {
  std::vector<ParameterBlock> out;
  for (std::size_t i = 0; i < encoder_.size(); ++i) append_blocks(out, "enc" + std::to_string(i), encoder_[i]);
  for (std::size_t i = 0; i < decoder_.size(); ++i) append_blocks(out, "dec" + std::to_string(i), decoder_[i]);
  return out;
}

std::vector<std::span<const double>> Generator::parameter_views() const {
  std::vector<std::span<const double>> out;
  for (const auto& l : encoder_) append_views(out, l);
  for (const auto& l : decoder_) append_views(out, l);
  return out;
}

GradientSet Generator::make_gradients() const { return gradients_like(parameter_views()); }

std::size_t Generator::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : encoder_) n += l.parameter_count();
  for (const auto& l : decoder_) n += l.parameter_count();
  return n;
}

std::vector<ParameterCount> Generator::parameter_breakdown() const {
  std::vector<ParameterCount> out;
  for (std::size_t i = 0; i < encoder_.size(); ++i)
    out.push_back({"enc" + std::to_string(i), encoder_[i].weights.size(), encoder_[i].bias.size()});
  for (std::size_t i = 0; i < decoder_.size(); ++i)
    out.push_back({"dec" + std::to_string(i), decoder_[i].weights.size(), decoder_[i].bias.size()});
  return out;
}

// ---------------------------------------------------------------------------
// Discriminator

Discriminator::Discriminator(DiscriminatorConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  std::size_t in = cfg_.input_channels;
  for (std::size_t l = 0; l < cfg_.layer_count(); ++l) {
    const std::size_t out = l < cfg_.channels.size() ? cfg_.channels[l] : 1;
    layers_.emplace_back(in, out, cfg_.q_order, cfg_.kernel_size, cfg_.strides[l], cfg_.padding);
    in = out;
  }
  for (auto& l : layers_) initialize_layer(l.weights, l.bias, rng);
}

FeatureMap Discriminator::forward(const FeatureMap& x) const {
  DiscriminatorTrace trace;
  return forward(x, trace);
}

FeatureMap Discriminator::forward(const FeatureMap& x, DiscriminatorTrace& trace) const {
  if (x.channels() != cfg_.input_channels)
    throw ConfigError("discriminator: expected " + std::to_string(cfg_.input_channels) +
                      " input channel(s), got " + std::to_string(x.channels()));
  trace.input = x;
  trace.outputs.clear();
  const FeatureMap* h = &trace.input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    FeatureMap z = op_forward(layers_[l], *h);
    if (l + 1 < layers_.size()) tanh_inplace(z);
    trace.outputs.push_back(std::move(z));
    h = &trace.outputs.back();
  }
  return trace.outputs.back();
}

FeatureMap Discriminator::backward(const DiscriminatorTrace& trace, const FeatureMap& grad_output,
                                   GradientSet* grads, bool need_input_grad) const {
  if (trace.outputs.size() != layers_.size())
    throw ConfigError("discriminator backward: trace does not belong to this network");
  if (!grad_output.same_shape(trace.outputs.back()))
    throw ConfigError("discriminator backward: gradient shape does not match the output");
  FeatureMap g = grad_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    FeatureMap gz = l + 1 < layers_.size() ? tanh_backward(trace.outputs[l], g) : std::move(g);
    const FeatureMap& in = l == 0 ? trace.input : trace.outputs[l - 1];
    const bool want_input = l > 0 || need_input_grad;
    g = detail::op_backward_into(layers_[l].weights, layers_[l].geometry, false, in, gz,
                                 {want_input, grads != nullptr}, block(grads, 2 * l),
                                 block(grads, 2 * l + 1));
  }
  return need_input_grad ? g : FeatureMap{};
}

std::vector<ParameterBlock> Discriminator::parameters() {
  std::vector<ParameterBlock> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) append_blocks(out, "layer" + std::to_string(i), layers_[i]);
  return out;
}

std::vector<std::span<const double>> Discriminator::parameter_views() const {
  std::vector<std::span<const double>> out;
  for (const auto& l : layers_) append_views(out, l);
  return out;
}

GradientSet Discriminator::make_gradients() const { return gradients_like(parameter_views()); }

std::size_t Discriminator::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.parameter_count();
  return n;
}

std::vector<ParameterCount> Discriminator::parameter_breakdown() const {
  std::vector<ParameterCount> out;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    out.push_back({"layer" + std::to_string(i), layers_[i].weights.size(), layers_[i].bias.size()});
  return out;
}

Generator build_generator(const GeneratorConfig& cfg, std::uint64_t seed) { return Generator(cfg, seed); }

Discriminator build_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) {
  return Discriminator(cfg, seed);
}

}  // namespace ecgr
