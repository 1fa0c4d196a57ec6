#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mgan::nn {

/// Dense row-major matrix of doubles.
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool all_finite() const noexcept;
  std::string shape_string() const;

  friend bool operator==(const Tensor2&, const Tensor2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a(n×k) · b(k×m)
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
/// aᵀ(k×n)ᵀ · b(k×m) -> n×m
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);
/// a(n×k) · bᵀ where b is m×k -> n×m
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);

/// Rows selected by index, in order.
Tensor2 gather_rows(const Tensor2& src, std::span<const std::size_t> indices);
/// Vertical concatenation; all parts must share a column count.
Tensor2 vstack(std::span<const Tensor2> parts);

}  // namespace mgan::nn
