#pragma once

#include <cstddef>
#include <span>

#include "middlegan/tensor.hpp"

namespace mgan::nn {

/// Scalar loss and its gradient with respect to whatever tensor it was
/// evaluated on (network output or logits, depending on the function).
struct LossResult {
  double value = 0.0;
  Tensor2 grad;
};

/// 0.5 · mean over rows of ||output − target||².
LossResult mean_squared_error(const Tensor2& output, const Tensor2& target);

/// Binary cross-entropy of sigmoid(logits) against per-row targets in [0,1],
/// averaged over rows. Gradient is with respect to the logits.
LossResult bce_with_logits(const Tensor2& logits, std::span<const double> targets);

/// Softmax cross-entropy averaged over rows. Gradient is w.r.t. the logits.
LossResult softmax_cross_entropy(const Tensor2& logits, std::span<const std::size_t> labels);

/// Row-wise softmax.
Tensor2 softmax(const Tensor2& logits);

/// log(1 + exp(x)) without overflow.
double softplus(double x) noexcept;

}  // namespace mgan::nn
