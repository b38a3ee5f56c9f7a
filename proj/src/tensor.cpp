#include "gwn/tensor.hpp"

#include <cmath>
#include <stdexcept>

#include "gwn/pmf.hpp"

namespace gwn {
namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t s : shape) {
    if (s == 0) throw ValidationError("Tensor: shape entries must be >= 1");
    n *= s;
  }
  return n;
}

}  // namespace

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw ValidationError("Tensor: shape " + gwn::shape_string(shape_) + " needs " +
                          std::to_string(element_count(shape_)) + " values, got " +
                          std::to_string(data_.size()));
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, std::vector<double>{v}); }

std::size_t Tensor::rows() const {
  if (shape_.size() == 1) return 1;
  if (shape_.size() != 2) throw std::invalid_argument("Tensor::rows: not 2-D " + shape_string());
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 1) return shape_[0];
  if (shape_.size() != 2) throw std::invalid_argument("Tensor::cols: not 2-D " + shape_string());
  return shape_[1];
}

double Tensor::item() const {
  if (data_.size() != 1) throw std::invalid_argument("Tensor::item: not a scalar " + shape_string());
  return data_[0];
}

std::string Tensor::shape_string() const { return gwn::shape_string(shape_); }

double round_half_away(double x) { return std::round(x); }

}  // namespace gwn
