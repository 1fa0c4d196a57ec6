#include "middlegan/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "middlegan/error.hpp"

namespace mgan::nn {

namespace {

double activate(const Activation& act, double z) {
  switch (act.kind) {
    case ActivationKind::leaky_rectifier:
      return z > 0.0 ? z : act.slope * z;
    case ActivationKind::tanh:
      return std::tanh(z);
    case ActivationKind::sigmoid: {
      // Saturate inside the open interval so downstream logs stay finite.
      constexpr double hi = 1.0 - 0x1p-53;
      if (z >= 0.0) return std::min(hi, 1.0 / (1.0 + std::exp(-z)));
      const double e = std::exp(z);
      return std::max(std::numeric_limits<double>::min(), e / (1.0 + e));
    }
    case ActivationKind::identity:
      return z;
  }
  return z;
}

// Derivative expressed through the pre-activation z and output y.
double activate_grad(const Activation& act, double z, double y) {
  switch (act.kind) {
    case ActivationKind::leaky_rectifier:
      return z > 0.0 ? 1.0 : act.slope;
    case ActivationKind::tanh:
      return 1.0 - y * y;
    case ActivationKind::sigmoid:
      return y * (1.0 - y);
    case ActivationKind::identity:
      return 1.0;
  }
  return 1.0;
}

}  // namespace

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::leaky_rectifier:
      return "leaky_rectifier";
    case ActivationKind::tanh:
      return "tanh";
    case ActivationKind::sigmoid:
      return "sigmoid";
    case ActivationKind::identity:
      return "identity";
  }
  return "identity";
}

ActivationKind activation_from_string(const std::string& name) {
  if (name == "leaky_rectifier" || name == "leaky_relu") return ActivationKind::leaky_rectifier;
  if (name == "tanh") return ActivationKind::tanh;
  if (name == "sigmoid") return ActivationKind::sigmoid;
  if (name == "identity") return ActivationKind::identity;
  throw InvalidArgument("unknown activation '" + name + "'");
}

std::size_t Network::input_size() const {
  return layers.empty() ? 0 : layers.front().fan_in();
}

std::size_t Network::output_size() const {
  return layers.empty() ? 0 : layers.back().fan_out();
}

std::size_t Network::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void Network::validate() const {
  if (layers.empty()) throw ShapeError("network has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (l.bias.rows() != 1 || l.bias.cols() != l.fan_out()) {
      throw ShapeError("layer " + std::to_string(k) + ": bias " + l.bias.shape_string() +
                       " does not match weight " + l.weight.shape_string());
    }
    if (k + 1 < layers.size() && layers[k + 1].fan_in() != l.fan_out()) {
      throw ShapeError("layer " + std::to_string(k) + " outputs " + std::to_string(l.fan_out()) +
                       " but layer " + std::to_string(k + 1) + " expects " +
                       std::to_string(layers[k + 1].fan_in()));
    }
  }
}

Network make_mlp(std::size_t input_size, std::span<const std::size_t> hidden,
                 std::size_t output_size, Activation hidden_activation,
                 Activation output_activation, Rng& rng) {
  if (input_size == 0 || output_size == 0) throw ShapeError("make_mlp: zero-sized layer");
  std::vector<std::size_t> sizes{input_size};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(output_size);

  Network net;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const std::size_t fan_in = sizes[k];
    const std::size_t fan_out = sizes[k + 1];
    if (fan_out == 0) throw ShapeError("make_mlp: zero-sized hidden layer");
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Tensor2(fan_in, fan_out), Tensor2(1, fan_out),
                     k + 2 == sizes.size() ? output_activation : hidden_activation};
    for (double& w : layer.weight.data()) w = dist(rng);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

ForwardCache forward(const Network& net, const Tensor2& batch) {
  net.validate();
  if (batch.cols() != net.input_size()) {
    throw ShapeError("forward: batch is " + batch.shape_string() + " but network expects " +
                     std::to_string(net.input_size()) + " input columns");
  }
  if (!batch.all_finite()) throw InvalidArgument("forward: batch has non-finite entries");

  ForwardCache cache;
  cache.inputs.reserve(net.layers.size());
  cache.preactivations.reserve(net.layers.size());
  Tensor2 x = batch;
  for (const auto& layer : net.layers) {
    Tensor2 z = matmul(x, layer.weight);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto r = z.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) r[j] += layer.bias(0, j);
    }
    Tensor2 y = z;
    for (double& v : y.data()) v = activate(layer.activation, v);
    cache.inputs.push_back(std::move(x));
    cache.preactivations.push_back(std::move(z));
    x = std::move(y);
  }
  cache.output = std::move(x);
  return cache;
}

Tensor2 predict(const Network& net, const Tensor2& batch) {
  return forward(net, batch).output;
}

bool Gradients::all_finite() const noexcept {
  for (const auto& l : layers) {
    if (!l.weight.all_finite() || !l.bias.all_finite()) return false;
  }
  return input.all_finite();
}

Gradients backward(const Network& net, const ForwardCache& cache, const Tensor2& upstream,
                   UpstreamAt at) {
  if (cache.empty() || cache.inputs.size() != net.layers.size() ||
      cache.preactivations.size() != net.layers.size()) {
    throw InvalidArgument("backward: no matching forward cache for this network");
  }
  if (upstream.rows() != cache.output.rows() || upstream.cols() != cache.output.cols()) {
    throw ShapeError("backward: upstream gradient " + upstream.shape_string() +
                     " does not match output " + cache.output.shape_string());
  }

  const std::size_t L = net.layers.size();
  Gradients grads;
  grads.layers.resize(L);
  Tensor2 delta = upstream;
  for (std::size_t k = L; k-- > 0;) {
    const auto& layer = net.layers[k];
    const Tensor2& z = cache.preactivations[k];
    const Tensor2& y = k + 1 < L ? cache.inputs[k + 1] : cache.output;
    if (!(k + 1 == L && at == UpstreamAt::final_preactivation)) {
      for (std::size_t i = 0; i < delta.size(); ++i) {
        delta.data()[i] *= activate_grad(layer.activation, z.data()[i], y.data()[i]);
      }
    }
    grads.layers[k].weight = matmul_tn(cache.inputs[k], delta);
    Tensor2 db(1, layer.fan_out());
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      auto r = delta.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) db(0, j) += r[j];
    }
    grads.layers[k].bias = std::move(db);
    delta = matmul_nt(delta, layer.weight);
  }
  grads.input = std::move(delta);
  return grads;
}

std::vector<std::span<double>> parameter_views(Network& net) {
  std::vector<std::span<double>> views;
  for (auto& l : net.layers) {
    views.emplace_back(l.weight.data());
    views.emplace_back(l.bias.data());
  }
  return views;
}

std::vector<std::span<const double>> parameter_views(const Gradients& grads) {
  std::vector<std::span<const double>> views;
  for (const auto& l : grads.layers) {
    views.emplace_back(l.weight.data());
    views.emplace_back(l.bias.data());
  }
  return views;
}

}  // namespace mgan::nn
