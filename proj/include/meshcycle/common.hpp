#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mc {

// Error taxonomy, mapped to process exit codes by the CLI:
//   StructuralError / ConfigError -> 2, NumericalError -> 3.
struct StructuralError : std::runtime_error {
  explicit StructuralError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

void log_info(const std::string& msg);
void log_warn(const std::string& msg);

// Deterministic per-purpose RNG stream: same (seed, stream) always yields the
// same generator, and distinct streams stay decoupled.
std::mt19937_64 make_rng(std::uint64_t seed, std::string_view stream);

// Worker count: min(hardware, MESHCYCLE_THREADS if set).
int thread_cap();

// Runs fn(0..n-1) on up to thread_cap() workers. Exceptions are rethrown on
// the caller thread after all workers join.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace mc
