#pragma once
// Named parameter registry. Master values live here across steps; each
// forward pass binds them onto a fresh tape through a TapeBinding.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "meshcycle/tape.hpp"
#include "meshcycle/tensor.hpp"

namespace mc::ad {

struct ParamEntry {
  std::string name;
  Tensor value;
  std::vector<double> grad;    // accumulated by TapeBinding::collect_grads
  std::vector<double> adam_m;  // optimizer state, allocated on first update
  std::vector<double> adam_v;
};

class ParamStore {
 public:
  Tensor create(const std::string& name, Tensor init);
  bool has(const std::string& name) const;
  ParamEntry& entry(const std::string& name);
  const ParamEntry& entry(const std::string& name) const;
  const std::vector<std::string>& names() const { return order_; }
  std::int64_t total_size() const;

  void zero_grads();

 private:
  std::map<std::string, ParamEntry> entries_;
  std::vector<std::string> order_;  // creation order
};

// Binds store parameters onto one tape. A parameter used several times in a
// forward pass maps to a single leaf, so fan-out gradients accumulate there.
class TapeBinding {
 public:
  TapeBinding(Tape& tape, ParamStore& store) : tape_(tape), store_(store) {}

  Tensor operator()(const std::string& name);

  // Adds this tape's gradients onto the store's grad accumulators.
  void collect_grads();

 private:
  Tape& tape_;
  ParamStore& store_;
  std::map<std::string, Tensor> bound_;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::int64_t coords_checked = 0;
  bool pass = false;
};

using LossFn = std::function<Tensor(Tape&, TapeBinding&)>;

// Central-difference check of reverse-mode gradients on a random coordinate
// sample (at least min(64, size) coords per parameter).
GradCheckReport grad_check(const LossFn& fn, ParamStore& store, double h, double tol,
                           std::uint64_t seed = 0);

}  // namespace mc::ad
