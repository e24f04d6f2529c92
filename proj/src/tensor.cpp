#include "ranl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "ranl/errors.hpp"

namespace ranl {

std::vector<std::size_t> Shape::extents() const {
  if (rank == 1) return {rows};
  return {rows, cols};
}

std::string Shape::str() const {
  std::ostringstream out;
  if (rank == 1) {
    out << "[" << rows << "]";
  } else {
    out << "[" << rows << "x" << cols << "]";
  }
  return out.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), values_(shape.numel(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.numel()) {
    throw DimensionError("tensor " + shape_.str() + " built from " + std::to_string(values_.size()) +
                         " values");
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  Shape shape = Shape::vector(values.size());
  return Tensor(shape, std::move(values));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return vector(std::vector<double>(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor(Shape::matrix(rows, cols), std::move(values));
}

void Tensor::enable_grad() {
  if (!grad_enabled_) {
    grad_.assign(values_.size(), 0.0);
    grad_enabled_ = true;
  }
}

void Tensor::zero_grad() {
  std::fill(grad_.begin(), grad_.end(), 0.0);
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

bool Tensor::same_values(const Tensor& other) const {
  if (!(shape_ == other.shape_)) return false;
  if (values_.empty()) return true;
  return std::memcmp(values_.data(), other.values_.data(), values_.size() * sizeof(double)) == 0;
}

}  // namespace ranl
