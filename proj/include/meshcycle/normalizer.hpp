#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meshcycle/checkpoint.hpp"
#include "meshcycle/tensor.hpp"

namespace mc {

// Online per-channel mean/std over accumulated rows. Statistics freeze once
// the warmup budget is reached; the std is floored at 1e-8.
class Normalizer {
 public:
  Normalizer() = default;
  explicit Normalizer(std::int64_t width);

  void accumulate(const ad::Tensor& rows);
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  std::int64_t width() const { return width_; }
  std::int64_t count() const { return count_; }

  std::vector<double> mean() const;
  std::vector<double> stdev() const;

  ad::Tensor normalize(const ad::Tensor& x) const;
  ad::Tensor denormalize(const ad::Tensor& y) const;

  void to_checkpoint(Checkpoint& ckpt, const std::string& prefix) const;
  static Normalizer from_checkpoint(const Checkpoint& ckpt, const std::string& prefix);

 private:
  std::int64_t width_ = 0;
  std::int64_t count_ = 0;
  bool frozen_ = false;
  std::vector<double> sum_;
  std::vector<double> sumsq_;
};

}  // namespace mc
