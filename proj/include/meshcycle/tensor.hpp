#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

namespace mc::ad {

// Dense row-major double tensor. The buffer is shared between copies, so a
// Tensor is treated as immutable once handed to another component; mutate
// through data_mut() only while building the value. A Tensor may carry a tape
// node id when it was produced by (or registered with) a Tape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> shape);
  Tensor(std::int64_t rows, std::int64_t cols);

  static Tensor from(std::vector<std::int64_t> shape, std::vector<double> data);
  static Tensor scalar(double v);

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t ndim() const { return shape_.size(); }
  std::int64_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  // 2-D accessors (a 1-D tensor reads as a single row).
  std::int64_t rows() const;
  std::int64_t cols() const;

  std::span<const double> data() const { return {buf_->data(), buf_->size()}; }
  std::span<double> data_mut() { return {buf_->data(), buf_->size()}; }
  double at(std::int64_t r, std::int64_t c) const { return (*buf_)[r * cols() + c]; }
  double& at_mut(std::int64_t r, std::int64_t c) { return (*buf_)[r * cols() + c]; }
  double value() const;  // scalar tensors only

  Tensor clone() const;

  int node() const { return node_; }
  bool tracked() const { return node_ >= 0; }

 private:
  std::shared_ptr<std::vector<double>> buf_;
  std::vector<std::int64_t> shape_;
  std::int64_t size_ = 0;
  int node_ = -1;

  friend class Tape;
};

}  // namespace mc::ad
