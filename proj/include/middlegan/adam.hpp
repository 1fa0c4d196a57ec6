#pragma once

#include <cstddef>
#include <vector>

#include "middlegan/network.hpp"

namespace mgan::nn {

struct AdamConfig {
  double learning_rate = 0.0002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam settings for generator/discriminator networks (beta1 = 0.5).
inline AdamConfig gan_adam(double learning_rate = 0.0002) {
  return {learning_rate, 0.5, 0.999, 1e-8};
}

struct AdamState {
  std::size_t step = 0;
  std::vector<Tensor2> first_moment;   // one per parameter tensor, W0, b0, W1, ...
  std::vector<Tensor2> second_moment;
  double learning_rate = 0.0002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Zeroed moments shaped like `net`'s parameters.
  static AdamState for_network(const Network& net, const AdamConfig& cfg = {});
};

/// One bias-corrected Adam update of `net` in place. Throws DivergenceError
/// naming the offending tensor when any gradient entry is non-finite; in that
/// case neither `net` nor `state` is modified.
void adam_step(Network& net, const Gradients& grads, AdamState& state);

}  // namespace mgan::nn
