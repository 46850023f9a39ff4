#pragma once
// Define-by-run reverse-mode tape over dense double tensors. A tape is built
// fresh for every forward pass (graphs change per sample under masking and
// pruning) and is confined to one thread for its lifetime.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "meshcycle/tensor.hpp"

namespace mc::ad {

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Track a value as a leaf; gradients become queryable after backward().
  Tensor leaf(const Tensor& value);

  Tensor matmul(const Tensor& a, const Tensor& b);
  // Same shape, or b a 1 x n row broadcast over a's rows.
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double s);
  Tensor concat_cols(const Tensor& a, const Tensor& b);
  Tensor relu(const Tensor& a);
  Tensor leaky_relu(const Tensor& a, double slope = 0.2);
  Tensor elu(const Tensor& a);
  // Rowwise normalization with learnable gain/bias (1 x n each).
  Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);
  Tensor softmax_rows(const Tensor& x);
  // Softmax over rows within each segment, independently per column.
  Tensor segment_softmax(const Tensor& x, std::span<const std::int64_t> seg, std::int64_t nseg);
  Tensor segment_sum(const Tensor& x, std::span<const std::int64_t> seg, std::int64_t nseg);
  Tensor gather_rows(const Tensor& x, std::span<const std::int64_t> idx);
  // y[i,:] = x[i,:] * s[i]  (s is m x 1)
  Tensor rowwise_mul(const Tensor& x, const Tensor& s);
  // y[:,j] = x[:,j] * s[j]  (s is 1 x n)
  Tensor colwise_mul(const Tensor& x, const Tensor& s);
  // out[i,:] = sum_f w[i*fan+f] * x[idx[i*fan+f],:]
  Tensor weighted_gather_sum(const Tensor& x, std::span<const std::int64_t> idx,
                             std::span<const double> w, std::int64_t out_rows,
                             std::int64_t fan);
  Tensor normalize_vec(const Tensor& p);  // p / ||p||
  Tensor sum_all(const Tensor& x);
  // Mean squared error over masked rows, all columns. Scalar output.
  Tensor l2_loss(const Tensor& pred, const Tensor& target,
                 std::span<const std::uint8_t> row_mask);

  void backward(const Tensor& loss);

  // Gradient of the last backward() w.r.t. a tracked tensor; empty span when
  // the tensor never influenced the loss.
  std::span<const double> grad(const Tensor& t) const;

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::function<void(Tape&)> back;  // null for leaves
  };

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  int cursor_ = -1;  // node whose backward closure is currently running
  bool ran_backward_ = false;

  Tensor make_node(Tensor value, std::function<void(Tape&)> back);
  std::vector<double>& grad_buf(int id, std::int64_t size);
  const std::vector<double>* grad_of(int id) const;
  static void check_finite(const Tensor& t, const char* op);
};

}  // namespace mc::ad
