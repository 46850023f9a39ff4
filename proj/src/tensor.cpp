#include "meshcycle/tensor.hpp"

#include <numeric>
#include <stdexcept>

namespace mc::ad {

namespace {
std::int64_t shape_size(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return shape.empty() ? 1 : n;
}
}  // namespace

Tensor::Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
  size_ = shape_size(shape_);
  buf_ = std::make_shared<std::vector<double>>(static_cast<std::size_t>(size_), 0.0);
}

Tensor::Tensor(std::int64_t rows, std::int64_t cols) : Tensor(std::vector<std::int64_t>{rows, cols}) {}

Tensor Tensor::from(std::vector<std::int64_t> shape, std::vector<double> data) {
  Tensor t;
  t.shape_ = std::move(shape);
  t.size_ = shape_size(t.shape_);
  if (static_cast<std::size_t>(t.size_) != data.size())
    throw std::invalid_argument("Tensor::from: data length does not match shape");
  t.buf_ = std::make_shared<std::vector<double>>(std::move(data));
  return t;
}

Tensor Tensor::scalar(double v) { return from({}, {v}); }

std::int64_t Tensor::rows() const { return shape_.size() >= 2 ? shape_[0] : 1; }

std::int64_t Tensor::cols() const {
  if (shape_.size() >= 2) return shape_[1];
  if (shape_.size() == 1) return shape_[0];
  return 1;
}

double Tensor::value() const {
  if (size_ != 1) throw std::logic_error("Tensor::value: not a scalar");
  return (*buf_)[0];
}

Tensor Tensor::clone() const {
  Tensor t;
  t.shape_ = shape_;
  t.size_ = size_;
  t.buf_ = std::make_shared<std::vector<double>>(*buf_);
  return t;
}

}  // namespace mc::ad
