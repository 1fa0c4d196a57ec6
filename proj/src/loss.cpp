#include "middlegan/loss.hpp"

#include <algorithm>
#include <cmath>

#include "middlegan/error.hpp"

namespace mgan::nn {

double softplus(double x) noexcept {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

LossResult mean_squared_error(const Tensor2& output, const Tensor2& target) {
  if (output.rows() != target.rows() || output.cols() != target.cols()) {
    throw ShapeError("mean_squared_error: " + output.shape_string() + " vs " +
                     target.shape_string());
  }
  const double n = static_cast<double>(output.rows());
  LossResult r{0.0, Tensor2(output.rows(), output.cols())};
  for (std::size_t i = 0; i < output.size(); ++i) {
    const double d = output.data()[i] - target.data()[i];
    r.value += 0.5 * d * d / n;
    r.grad.data()[i] = d / n;
  }
  return r;
}

LossResult bce_with_logits(const Tensor2& logits, std::span<const double> targets) {
  if (logits.cols() != 1 || logits.rows() != targets.size()) {
    throw ShapeError("bce_with_logits: logits " + logits.shape_string() + " vs " +
                     std::to_string(targets.size()) + " targets");
  }
  const double n = static_cast<double>(logits.rows());
  LossResult r{0.0, Tensor2(logits.rows(), 1)};
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const double z = logits(i, 0);
    const double y = targets[i];
    // -[y log σ(z) + (1-y) log(1-σ(z))] = y·softplus(-z) + (1-y)·softplus(z)
    r.value += (y * softplus(-z) + (1.0 - y) * softplus(z)) / n;
    const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    r.grad(i, 0) = (s - y) / n;
  }
  return r;
}

Tensor2 softmax(const Tensor2& logits) {
  Tensor2 out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto z = logits.row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      o[j] = std::exp(z[j] - mx);
      sum += o[j];
    }
    for (double& v : o) v /= sum;
  }
  return out;
}

LossResult softmax_cross_entropy(const Tensor2& logits, std::span<const std::size_t> labels) {
  if (logits.rows() != labels.size()) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(logits.rows()) + " rows vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const double n = static_cast<double>(logits.rows());
  LossResult r{0.0, softmax(logits)};
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (labels[i] >= logits.cols()) throw InvalidArgument("softmax_cross_entropy: label out of range");
    auto z = logits.row(i);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    r.value += (mx + std::log(sum) - z[labels[i]]) / n;
    auto g = r.grad.row(i);
    g[labels[i]] -= 1.0;
    for (double& v : g) v /= n;
  }
  return r;
}

}  // namespace mgan::nn
