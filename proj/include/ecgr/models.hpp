#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ecgr/numerics.hpp"
#include "ecgr/selfonn.hpp"

namespace ecgr {

/**
 * U-Net generator: one operational conv layer per encoder width (stride 2,
 * each halves the length), then mirrored operational transposed layers that
 * double it back. Decoder level j adds the encoder output of the same length
 * before its tanh. The last transposed layer maps to one channel with
 * final_kernel_size taps.
 *
 * Defaults: 5 + 5 layers, widths tuned so the parameter counts land near
 * 0.26M (Q = 1) and 0.78M (Q = 3).
 */
struct GeneratorConfig {
  std::size_t q_order = 3;
  std::vector<std::size_t> encoder_channels{16, 32, 64, 96, 160};
  std::size_t kernel_size = 5;
  std::size_t final_kernel_size = 6;
  std::size_t stride = 2;
  std::size_t input_channels = 1;

  // Input length must be a multiple of this.
  std::size_t length_multiple() const;
  void validate() const;
  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

/**
 * Discriminator: tanh after every layer except the last, which is linear and
 * single-channel so least-squares targets 0 and 1 are reachable.
 */
struct DiscriminatorConfig {
  std::size_t q_order = 3;
  std::vector<std::size_t> channels{16, 32, 64, 144, 224};  // hidden widths
  std::size_t kernel_size = 4;
  std::vector<std::size_t> strides{2, 2, 2, 2, 1, 2};       // one per layer
  std::size_t padding = 1;
  std::size_t input_channels = 1;

  std::size_t layer_count() const { return channels.size() + 1; }
  std::size_t output_length(std::size_t input_length) const;
  void validate() const;
  friend bool operator==(const DiscriminatorConfig&, const DiscriminatorConfig&) = default;
};

// Named parameter block of a network, in checkpoint order.
struct ParameterBlock {
  std::string name;
  std::span<double> values;
};

struct ParameterCount {
  std::string layer;
  std::size_t weights = 0;
  std::size_t biases = 0;
  std::size_t total() const { return weights + biases; }
};

// Per-block gradient buffers congruent with a network's parameter blocks.
struct GradientSet {
  std::vector<std::vector<double>> blocks;

  void zero();
  std::vector<std::span<const double>> views() const;
  double squared_norm() const;
};

struct GeneratorTrace {
  FeatureMap input;
  std::vector<FeatureMap> encoder;  // post-activation outputs
  std::vector<FeatureMap> decoder;  // post-activation outputs; back() is the generator output
};

class Generator {
 public:
  Generator() = default;
  Generator(GeneratorConfig cfg, std::uint64_t seed);

  const GeneratorConfig& config() const { return cfg_; }
  const std::vector<OperationalConvLayer>& encoder() const { return encoder_; }
  const std::vector<OperationalTransposedConvLayer>& decoder() const { return decoder_; }
  std::vector<OperationalConvLayer>& encoder() { return encoder_; }
  std::vector<OperationalTransposedConvLayer>& decoder() { return decoder_; }

  FeatureMap forward(const FeatureMap& x) const;
  FeatureMap forward(const FeatureMap& x, GeneratorTrace& trace) const;

  // Accumulates parameter gradients into `grads` (skipped when null) and
  // returns dL/dx when need_input_grad is set.
  FeatureMap backward(const GeneratorTrace& trace, const FeatureMap& grad_output, GradientSet* grads,
                      bool need_input_grad) const;

  std::vector<ParameterBlock> parameters();
  std::vector<std::span<const double>> parameter_views() const;
  GradientSet make_gradients() const;
  std::size_t parameter_count() const;
  std::vector<ParameterCount> parameter_breakdown() const;

 private:
  void check_input(const FeatureMap& x) const;

  GeneratorConfig cfg_;
  std::vector<OperationalConvLayer> encoder_;
  std::vector<OperationalTransposedConvLayer> decoder_;
};

struct DiscriminatorTrace {
  FeatureMap input;
  std::vector<FeatureMap> outputs;  // per layer; hidden ones post-tanh, last one linear
};

class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(DiscriminatorConfig cfg, std::uint64_t seed);

  const DiscriminatorConfig& config() const { return cfg_; }
  const std::vector<OperationalConvLayer>& layers() const { return layers_; }
  std::vector<OperationalConvLayer>& layers() { return layers_; }

  // (B, 1, output_length) score vectors.
  FeatureMap forward(const FeatureMap& x) const;
  FeatureMap forward(const FeatureMap& x, DiscriminatorTrace& trace) const;
  FeatureMap backward(const DiscriminatorTrace& trace, const FeatureMap& grad_output,
                      GradientSet* grads, bool need_input_grad) const;

  std::vector<ParameterBlock> parameters();
  std::vector<std::span<const double>> parameter_views() const;
  GradientSet make_gradients() const;
  std::size_t parameter_count() const;
  std::vector<ParameterCount> parameter_breakdown() const;

 private:
  DiscriminatorConfig cfg_;
  std::vector<OperationalConvLayer> layers_;
};

Generator build_generator(const GeneratorConfig& cfg, std::uint64_t seed);
Discriminator build_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed);

// Four-times-wider preset for comparison runs.
GeneratorConfig wide_generator_preset(std::size_t q_order = 1);
DiscriminatorConfig wide_discriminator_preset(std::size_t q_order = 1);

}  // namespace ecgr
