#include "ulo/tensor.hpp"

#include <cmath>
#include <sstream>

namespace ulo {

std::string shape_str(const Shape& s) {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out << ", ";
    out << s[i];
  }
  out << "]";
  return out.str();
}

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(s));
    n *= d;
  }
  return n;
}

Tensor Tensor::uninit(Shape shape) {
  Tensor t;
  t.numel_ = shape_numel(shape);
  t.shape_ = std::move(shape);
  t.data_ = std::shared_ptr<double[]>(new double[static_cast<size_t>(t.numel_)]);
  return t;
}

Tensor Tensor::zeros(Shape shape) {
  Tensor t = uninit(std::move(shape));
  std::memset(t.data(), 0, sizeof(double) * static_cast<size_t>(t.numel_));
  return t;
}

Tensor Tensor::full(Shape shape, double value) {
  Tensor t = uninit(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::scalar(double value) { return full({}, value); }

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  Tensor t = uninit(std::move(shape));
  if (t.numel_ != static_cast<int64_t>(values.size())) {
    throw ShapeError("from: " + std::to_string(values.size()) +
                     " values for shape " + shape_str(t.shape_));
  }
  std::memcpy(t.data(), values.data(), sizeof(double) * values.size());
  return t;
}

Tensor Tensor::clone() const {
  Tensor t = uninit(shape_);
  std::memcpy(t.data(), data(), sizeof(double) * static_cast<size_t>(numel_));
  return t;
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel_) {
    throw ShapeError("reshape: " + shape_str(shape_) + " -> " + shape_str(shape) +
                     " changes element count");
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.numel_ = numel_;
  t.data_ = data_;
  return t;
}

void Tensor::fill(double value) {
  for (int64_t i = 0; i < numel_; ++i) data_[i] = value;
}

bool Tensor::all_finite() const {
  for (int64_t i = 0; i < numel_; ++i) {
    if (!std::isfinite(data_[i])) return false;
  }
  return true;
}

}  // namespace ulo
