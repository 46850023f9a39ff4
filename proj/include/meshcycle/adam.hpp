#pragma once

#include <cstdint>
#include <string>

#include "meshcycle/checkpoint.hpp"
#include "meshcycle/params.hpp"

namespace mc {

// Bias-corrected Adam over a ParamStore; moments live in the store entries.
class Adam {
 public:
  struct Config {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam() = default;
  explicit Adam(Config cfg) : cfg_(cfg) {}

  void step(ad::ParamStore& store, double lr);
  std::int64_t steps_taken() const { return t_; }
  void reset(ad::ParamStore& store);

  void to_checkpoint(const ad::ParamStore& store, Checkpoint& ckpt,
                     const std::string& prefix) const;
  void from_checkpoint(ad::ParamStore& store, const Checkpoint& ckpt,
                       const std::string& prefix);

 private:
  Config cfg_;
  std::int64_t t_ = 0;
};

}  // namespace mc
