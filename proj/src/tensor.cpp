#include "seqmark/tensor.hpp"

#include <cassert>
#include <cmath>
#include <sstream>

#include "seqmark/error.hpp"

namespace seqmark {

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.size() > 3) {
    throw Error(ErrorCode::invalid_argument, "tensor rank exceeds 3: " + to_string(shape));
  }
  for (auto e : shape) {
    if (e == 0) throw Error(ErrorCode::invalid_argument, "tensor extents must be positive: " + to_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != shape_size(shape_)) {
    throw Error(ErrorCode::shape_mismatch, "tensor data length " + std::to_string(data_.size()) +
                                               " does not match shape " + to_string(shape_));
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const auto n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor(Shape{rows, cols}, std::move(values));
}

std::size_t Tensor::extent(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw Error(ErrorCode::axis_out_of_range,
                "axis " + std::to_string(axis) + " out of range for shape " + to_string(shape_));
  }
  return shape_[axis];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  assert(rank() == 2 && r < shape_[0] && c < shape_[1]);
  return data_[r * shape_[1] + c];
}

double& Tensor::at(std::size_t r, std::size_t c) {
  assert(rank() == 2 && r < shape_[0] && c < shape_[1]);
  return data_[r * shape_[1] + c];
}

std::span<const double> Tensor::row(std::size_t r) const {
  assert(rank() == 2 && r < shape_[0]);
  return std::span<const double>(data_).subspan(r * shape_[1], shape_[1]);
}

std::span<double> Tensor::row(std::size_t r) {
  assert(rank() == 2 && r < shape_[0]);
  return std::span<double>(data_).subspan(r * shape_[1], shape_[1]);
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw Error(ErrorCode::shape_mismatch, "item() on tensor of shape " + to_string(shape_));
  }
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace seqmark
