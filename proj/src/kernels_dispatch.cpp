#include "meshcycle/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace mc::kernels {

const KernelTable* avx2_table_impl();  // defined in kernels_avx2.cpp

const KernelTable* avx2_table() {
#if defined(__x86_64__)
  static const bool cpu_ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  if (!cpu_ok) return nullptr;
  return avx2_table_impl();
#else
  return nullptr;
#endif
}

namespace {

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable* pick_default() {
  if (const char* env = std::getenv("MESHCYCLE_KERNELS")) {
    std::string v(env);
    if (v == "scalar") return &scalar_table();
    if (v == "avx2" && avx2_table()) return avx2_table();
    // "auto" or anything unrecognized falls through to autodetect
  }
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

}  // namespace

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (!t) {
    t = pick_default();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

bool select_backend(std::string_view name) {
  if (name == "scalar") {
    g_active.store(&scalar_table(), std::memory_order_release);
    return true;
  }
  if (name == "avx2") {
    if (const KernelTable* t = avx2_table()) {
      g_active.store(t, std::memory_order_release);
      return true;
    }
    return false;
  }
  if (name == "auto") {
    g_active.store(pick_default(), std::memory_order_release);
    return true;
  }
  return false;
}

}  // namespace mc::kernels
