#include "meshcycle/adam.hpp"

#include <algorithm>
#include <cmath>

namespace mc {

void Adam::step(ad::ParamStore& store, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& name : store.names()) {
    auto& e = store.entry(name);
    const auto n = static_cast<std::size_t>(e.value.size());
    if (e.adam_m.empty()) {
      e.adam_m.assign(n, 0.0);
      e.adam_v.assign(n, 0.0);
    }
    auto vals = e.value.data_mut();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = e.grad[i];
      e.adam_m[i] = cfg_.beta1 * e.adam_m[i] + (1.0 - cfg_.beta1) * g;
      e.adam_v[i] = cfg_.beta2 * e.adam_v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = e.adam_m[i] / bc1;
      const double vhat = e.adam_v[i] / bc2;
      vals[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::reset(ad::ParamStore& store) {
  t_ = 0;
  for (const auto& name : store.names()) {
    auto& e = store.entry(name);
    std::fill(e.adam_m.begin(), e.adam_m.end(), 0.0);
    std::fill(e.adam_v.begin(), e.adam_v.end(), 0.0);
  }
}

void Adam::to_checkpoint(const ad::ParamStore& store, Checkpoint& ckpt,
                         const std::string& prefix) const {
  ckpt.put_scalar(prefix + "/t", static_cast<double>(t_));
  for (const auto& name : store.names()) {
    const auto& e = store.entry(name);
    if (e.adam_m.empty()) continue;
    ckpt.put(prefix + "/m/" + name, e.value.shape(), e.adam_m);
    ckpt.put(prefix + "/v/" + name, e.value.shape(), e.adam_v);
  }
}

void Adam::from_checkpoint(ad::ParamStore& store, const Checkpoint& ckpt,
                           const std::string& prefix) {
  t_ = static_cast<std::int64_t>(ckpt.scalar(prefix + "/t"));
  for (const auto& name : store.names()) {
    auto& e = store.entry(name);
    if (ckpt.has(prefix + "/m/" + name)) {
      e.adam_m = ckpt.data(prefix + "/m/" + name);
      e.adam_v = ckpt.data(prefix + "/v/" + name);
    }
  }
}

}  // namespace mc
