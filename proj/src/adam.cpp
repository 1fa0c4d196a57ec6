#include "middlegan/adam.hpp"

#include <cmath>

#include "middlegan/error.hpp"

namespace mgan::nn {

AdamState AdamState::for_network(const Network& net, const AdamConfig& cfg) {
  AdamState s;
  s.learning_rate = cfg.learning_rate;
  s.beta1 = cfg.beta1;
  s.beta2 = cfg.beta2;
  s.epsilon = cfg.epsilon;
  for (const auto& l : net.layers) {
    s.first_moment.emplace_back(l.weight.rows(), l.weight.cols());
    s.first_moment.emplace_back(l.bias.rows(), l.bias.cols());
    s.second_moment.emplace_back(l.weight.rows(), l.weight.cols());
    s.second_moment.emplace_back(l.bias.rows(), l.bias.cols());
  }
  return s;
}

void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  auto params = parameter_views(net);
  const auto g = parameter_views(grads);
  if (g.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ShapeError("adam_step: " + std::to_string(g.size()) + " gradient tensors, " +
                     std::to_string(params.size()) + " parameter tensors, " +
                     std::to_string(state.first_moment.size()) + " moment tensors");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (g[k].size() != params[k].size() || state.first_moment[k].size() != params[k].size()) {
      throw ShapeError("adam_step: tensor " + std::to_string(k) + " size mismatch");
    }
    for (std::size_t i = 0; i < g[k].size(); ++i) {
      if (!std::isfinite(g[k][i])) {
        throw DivergenceError("adam_step: non-finite gradient in layer " + std::to_string(k / 2) +
                                  (k % 2 ? " bias" : " weight") + " entry " + std::to_string(i) +
                                  " at step " + std::to_string(state.step + 1),
                              state.step);
      }
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_moment[k].data();
    auto& v = state.second_moment[k].data();
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double gi = g[k][i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      params[k][i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace mgan::nn
