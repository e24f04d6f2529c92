#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ranl {

// Extents of a rank-1 or rank-2 tensor. Rank-1 tensors have cols == 1 and
// rank == 1; all storage is row-major.
struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 1;
  int rank = 1;

  static Shape vector(std::size_t n) { return {n, 1, 1}; }
  static Shape matrix(std::size_t r, std::size_t c) { return {r, c, 2}; }

  std::size_t numel() const { return rows * cols; }
  std::vector<std::size_t> extents() const;
  std::string str() const;

  bool operator==(const Shape&) const = default;
};

// Dense array of doubles with an optional gradient slot.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor vector(std::vector<double> values);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor zeros(std::size_t n) { return Tensor(Shape::vector(n)); }
  static Tensor ones(std::size_t n) { return Tensor(Shape::vector(n), 1.0); }
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  int rank() const { return shape_.rank; }
  std::size_t rows() const { return shape_.rows; }
  std::size_t cols() const { return shape_.cols; }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * shape_.cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * shape_.cols + c]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * shape_.cols, shape_.cols);
  }

  bool has_grad() const { return grad_enabled_; }
  // Allocates a zeroed gradient slot if none exists.
  void enable_grad();
  void zero_grad();
  std::span<double> grad() { return grad_; }
  std::span<const double> grad() const { return grad_; }

  bool all_finite() const;

  // Values (not gradients) compare equal bit for bit.
  bool same_values(const Tensor& other) const;

 private:
  Shape shape_;
  std::vector<double> values_;
  std::vector<double> grad_;
  bool grad_enabled_ = false;
};

}  // namespace ranl
