#include "meshcycle/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "meshcycle/common.hpp"

namespace mc::ad {

Tensor ParamStore::create(const std::string& name, Tensor init) {
  if (entries_.count(name)) throw ConfigError("parameter already registered: " + name);
  ParamEntry e;
  e.name = name;
  e.value = std::move(init);
  e.grad.assign(static_cast<std::size_t>(e.value.size()), 0.0);
  auto [it, ok] = entries_.emplace(name, std::move(e));
  (void)ok;
  order_.push_back(name);
  return it->second.value;
}

bool ParamStore::has(const std::string& name) const { return entries_.count(name) > 0; }

ParamEntry& ParamStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const ParamEntry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

std::int64_t ParamStore::total_size() const {
  std::int64_t n = 0;
  for (const auto& name : order_) n += entry(name).value.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& name : order_) {
    auto& g = entry(name).grad;
    std::fill(g.begin(), g.end(), 0.0);
  }
}

Tensor TapeBinding::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Tensor t = tape_.leaf(store_.entry(name).value);
  bound_.emplace(name, t);
  return t;
}

void TapeBinding::collect_grads() {
  for (auto& [name, tensor] : bound_) {
    auto g = tape_.grad(tensor);
    if (g.empty()) continue;  // parameter did not reach the loss: zero gradient
    auto& acc = store_.entry(name).grad;
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
  }
}

GradCheckReport grad_check(const LossFn& fn, ParamStore& store, double h, double tol,
                           std::uint64_t seed) {
  if (!(h > 0.0)) throw ConfigError("grad_check: h must be positive");

  // Reverse-mode gradients.
  store.zero_grads();
  {
    Tape tape;
    TapeBinding bind(tape, store);
    Tensor loss = fn(tape, bind);
    tape.backward(loss);
    bind.collect_grads();
  }
  std::map<std::string, std::vector<double>> ad_grads;
  for (const auto& name : store.names()) ad_grads[name] = store.entry(name).grad;

  auto eval_loss = [&]() {
    Tape tape;
    TapeBinding bind(tape, store);
    return fn(tape, bind).value();
  };
  const double f0 = eval_loss();

  auto rng = make_rng(seed, "grad_check");
  GradCheckReport rep;
  for (const auto& name : store.names()) {
    auto& entry = store.entry(name);
    const std::int64_t size = entry.value.size();
    std::vector<std::int64_t> coords;
    if (size <= 64) {
      coords.resize(static_cast<std::size_t>(size));
      for (std::int64_t i = 0; i < size; ++i) coords[static_cast<std::size_t>(i)] = i;
    } else {
      std::uniform_int_distribution<std::int64_t> dist(0, size - 1);
      coords.resize(64);
      for (auto& c : coords) c = dist(rng);
    }
    auto vals = entry.value.data_mut();
    auto central_diff = [&](std::int64_t c, double step) {
      const double orig = vals[c];
      vals[c] = orig + step;
      const double fp = eval_loss();
      vals[c] = orig - step;
      const double fm = eval_loss();
      vals[c] = orig;
      return (fp - fm) / (2.0 * step);
    };
    // Central differences cannot resolve gradients below the cancellation
    // noise eps*|f|/(2 step); the denominator floor saturates there so pure
    // oracle noise on a near-zero gradient does not read as a failure.
    auto rel_err = [&](double fd, double adg, double step) {
      const double noise = 64.0 * std::numeric_limits<double>::epsilon() *
                           std::max(std::abs(f0), 1.0) / (2.0 * step);
      const double floor = std::max(1e-6, noise / tol);
      return std::abs(fd - adg) / std::max({std::abs(fd), std::abs(adg), floor});
    };
    for (auto c : coords) {
      const double ad = ad_grads[name][static_cast<std::size_t>(c)];
      double rel = rel_err(central_diff(c, h), ad, h);
      // A stencil that straddles a relu kink reports the average of two
      // slopes. Shrinking the step moves the stencil off the kink, while a
      // genuine adjoint defect stays wrong at every step size; keep the best
      // agreement so roundoff at the small steps cannot mask or fake errors.
      for (double shrink : {8.0, 64.0}) {
        if (rel <= tol) break;
        rel = std::min(rel, rel_err(central_diff(c, h / shrink), ad, h / shrink));
      }
      ++rep.coords_checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = name;
      }
    }
  }
  rep.pass = rep.max_rel_err < tol;
  return rep;
}

}  // namespace mc::ad
