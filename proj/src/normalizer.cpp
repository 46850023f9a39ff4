#include "meshcycle/normalizer.hpp"

#include <algorithm>
#include <cmath>

#include "meshcycle/common.hpp"

namespace mc {

namespace {
constexpr double kStdFloor = 1e-8;
}

Normalizer::Normalizer(std::int64_t width)
    : width_(width),
      sum_(static_cast<std::size_t>(width), 0.0),
      sumsq_(static_cast<std::size_t>(width), 0.0) {}

void Normalizer::accumulate(const ad::Tensor& rows) {
  if (frozen_) return;
  if (rows.cols() != width_) throw StructuralError("normalizer: width mismatch");
  auto d = rows.data();
  const std::int64_t m = rows.rows();
  for (std::int64_t r = 0; r < m; ++r)
    for (std::int64_t c = 0; c < width_; ++c) {
      sum_[static_cast<std::size_t>(c)] += d[r * width_ + c];
      sumsq_[static_cast<std::size_t>(c)] += d[r * width_ + c] * d[r * width_ + c];
    }
  count_ += m;
}

std::vector<double> Normalizer::mean() const {
  std::vector<double> m(static_cast<std::size_t>(width_), 0.0);
  if (count_ == 0) return m;
  for (std::int64_t c = 0; c < width_; ++c)
    m[static_cast<std::size_t>(c)] = sum_[static_cast<std::size_t>(c)] / count_;
  return m;
}

std::vector<double> Normalizer::stdev() const {
  std::vector<double> s(static_cast<std::size_t>(width_), 1.0);
  if (count_ == 0) return s;
  for (std::int64_t c = 0; c < width_; ++c) {
    const double mu = sum_[static_cast<std::size_t>(c)] / count_;
    const double var =
        std::max(sumsq_[static_cast<std::size_t>(c)] / count_ - mu * mu, 0.0);
    s[static_cast<std::size_t>(c)] = std::max(std::sqrt(var), kStdFloor);
  }
  return s;
}

ad::Tensor Normalizer::normalize(const ad::Tensor& x) const {
  if (x.cols() != width_) throw StructuralError("normalizer: width mismatch");
  const auto mu = mean();
  const auto sd = stdev();
  ad::Tensor out(x.rows(), x.cols());
  auto xd = x.data();
  auto od = out.data_mut();
  for (std::int64_t r = 0; r < x.rows(); ++r)
    for (std::int64_t c = 0; c < width_; ++c)
      od[r * width_ + c] = (xd[r * width_ + c] - mu[c]) / sd[c];
  return out;
}

ad::Tensor Normalizer::denormalize(const ad::Tensor& y) const {
  if (y.cols() != width_) throw StructuralError("normalizer: width mismatch");
  const auto mu = mean();
  const auto sd = stdev();
  ad::Tensor out(y.rows(), y.cols());
  auto yd = y.data();
  auto od = out.data_mut();
  for (std::int64_t r = 0; r < y.rows(); ++r)
    for (std::int64_t c = 0; c < width_; ++c)
      od[r * width_ + c] = yd[r * width_ + c] * sd[c] + mu[c];
  return out;
}

void Normalizer::to_checkpoint(Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.put(prefix + "/sum", {width_}, sum_);
  ckpt.put(prefix + "/sumsq", {width_}, sumsq_);
  ckpt.put_scalar(prefix + "/count", static_cast<double>(count_));
  ckpt.put_scalar(prefix + "/frozen", frozen_ ? 1.0 : 0.0);
}

Normalizer Normalizer::from_checkpoint(const Checkpoint& ckpt, const std::string& prefix) {
  const auto& sum = ckpt.data(prefix + "/sum");
  Normalizer n(static_cast<std::int64_t>(sum.size()));
  n.sum_ = sum;
  n.sumsq_ = ckpt.data(prefix + "/sumsq");
  n.count_ = static_cast<std::int64_t>(ckpt.scalar(prefix + "/count"));
  n.frozen_ = ckpt.scalar(prefix + "/frozen") != 0.0;
  return n;
}

}  // namespace mc
