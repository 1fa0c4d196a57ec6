#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "middlegan/rng.hpp"
#include "middlegan/tensor.hpp"

namespace mgan::nn {

enum class ActivationKind { leaky_rectifier, tanh, sigmoid, identity };

struct Activation {
  ActivationKind kind = ActivationKind::identity;
  double slope = 0.2;  // only used by leaky_rectifier

  static Activation leaky(double slope = 0.2) { return {ActivationKind::leaky_rectifier, slope}; }
  static Activation tanh() { return {ActivationKind::tanh, 0.2}; }
  static Activation sigmoid() { return {ActivationKind::sigmoid, 0.2}; }
  static Activation identity() { return {ActivationKind::identity, 0.2}; }

  friend bool operator==(const Activation&, const Activation&) = default;
};

std::string to_string(ActivationKind kind);
ActivationKind activation_from_string(const std::string& name);

/// y = act(x · weight + bias); weight is fan_in × fan_out, bias is 1 × fan_out.
struct DenseLayer {
  Tensor2 weight;
  Tensor2 bias;
  Activation activation;

  std::size_t fan_in() const noexcept { return weight.rows(); }
  std::size_t fan_out() const noexcept { return weight.cols(); }
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct Network {
  std::vector<DenseLayer> layers;

  std::size_t input_size() const;
  std::size_t output_size() const;
  std::size_t param_count() const;
  /// Throws ShapeError unless consecutive layers compose and biases match.
  void validate() const;

  friend bool operator==(const Network&, const Network&) = default;
};

/// Glorot-uniform weights in ±sqrt(6/(fan_in+fan_out)), zero biases.
Network make_mlp(std::size_t input_size, std::span<const std::size_t> hidden, std::size_t output_size,
                 Activation hidden_activation, Activation output_activation, Rng& rng);

/// Per-layer inputs and pre-activations from one forward pass.
struct ForwardCache {
  std::vector<Tensor2> inputs;
  std::vector<Tensor2> preactivations;
  Tensor2 output;

  bool empty() const noexcept { return inputs.empty(); }
};

ForwardCache forward(const Network& net, const Tensor2& batch);
/// Forward pass without keeping the cache.
Tensor2 predict(const Network& net, const Tensor2& batch);

struct LayerGradient {
  Tensor2 weight;
  Tensor2 bias;
};

struct Gradients {
  std::vector<LayerGradient> layers;
  Tensor2 input;  // d loss / d batch

  bool all_finite() const noexcept;
};

/// Where the upstream gradient attaches: after the final activation, or
/// directly on the final pre-activation (logits), which lets sigmoid and
/// softmax losses skip the saturating derivative.
enum class UpstreamAt { output, final_preactivation };

Gradients backward(const Network& net, const ForwardCache& cache, const Tensor2& upstream,
                   UpstreamAt at = UpstreamAt::output);

/// Flattened parameter views in layer order: W0, b0, W1, b1, ...
std::vector<std::span<double>> parameter_views(Network& net);
std::vector<std::span<const double>> parameter_views(const Gradients& grads);

}  // namespace mgan::nn
