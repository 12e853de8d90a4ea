#pragma once

#include <cstdint>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "ulo/error.hpp"

namespace ulo {

using Shape = std::vector<int64_t>;

std::string shape_str(const Shape& s);
int64_t shape_numel(const Shape& s);

// Dense row-major double tensor. The buffer is shared between copies;
// library code never mutates a tensor it did not just create, so copies
// behave like values in practice. Use clone() when a private buffer is
// needed.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor uninit(Shape shape);  // contents unspecified
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor from(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  int64_t numel() const { return numel_; }
  int64_t dim(size_t i) const { return shape_[i]; }
  size_t rank() const { return shape_.size(); }
  bool empty() const { return numel_ == 0; }

  double* data() { return data_.get(); }
  const double* data() const { return data_.get(); }

  double& operator[](int64_t i) { return data_[i]; }
  double operator[](int64_t i) const { return data_[i]; }

  // 2D / 4D accessors for the shapes the layers care about.
  double& at2(int64_t i, int64_t j) { return data_[i * shape_[1] + j]; }
  double at2(int64_t i, int64_t j) const { return data_[i * shape_[1] + j]; }
  double& at4(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  double at4(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  Tensor clone() const;

  // Same buffer, new shape (element counts must match).
  Tensor reshaped(Shape shape) const;

  void fill(double value);
  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  Shape shape_;
  std::shared_ptr<double[]> data_;
  int64_t numel_ = 0;
};

// Named trainable tensor plus its gradient and momentum buffer.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor momentum;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(Tensor::zeros(value.shape())),
        momentum(Tensor::zeros(value.shape())) {}
};

}  // namespace ulo
