#include "middlegan/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "middlegan/error.hpp"

namespace mgan::nn {

GradientCheckResult gradient_check(const Network& net, const OutputLoss& loss,
                                   const Tensor2& batch, double fd_step) {
  if (!(fd_step > 0.0)) throw InvalidArgument("gradient_check: fd_step must be > 0");

  const ForwardCache cache = forward(net, batch);
  const LossResult at = loss(cache.output);
  const Gradients analytic = backward(net, cache, at.grad);
  const auto grad_views = parameter_views(analytic);

  Network probe = net;
  auto params = parameter_views(probe);
  GradientCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double saved = params[k][i];
      params[k][i] = saved + fd_step;
      const double up = loss(predict(probe, batch)).value;
      params[k][i] = saved - fd_step;
      const double down = loss(predict(probe, batch)).value;
      params[k][i] = saved;

      const double numeric = (up - down) / (2.0 * fd_step);
      const double a = grad_views[k][i];
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      ++result.checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_tensor = k;
        result.worst_entry = i;
      }
    }
  }
  return result;
}

}  // namespace mgan::nn
