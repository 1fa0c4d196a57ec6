#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "middlegan/loss.hpp"
#include "middlegan/network.hpp"

namespace mgan::nn {

/// Loss of a network output, returning the value and d loss / d output.
using OutputLoss = std::function<LossResult(const Tensor2& output)>;

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_tensor = 0;  // index into parameter_views order
  std::size_t worst_entry = 0;
  std::size_t checked = 0;
};

/// Compares backward() against central finite differences over every
/// parameter. Relative error is |a − n| / max(1e-8, |a| + |n|).
GradientCheckResult gradient_check(const Network& net, const OutputLoss& loss,
                                   const Tensor2& batch, double fd_step);

}  // namespace mgan::nn
