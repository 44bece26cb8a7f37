#include <cstdlib>
#include <stdexcept>

#include "si/simd/kernels.hpp"

namespace si::simd {

const KernelTable* table_scalar();
const KernelTable* table_avx2();
const KernelTable* table_neon();

namespace {

const KernelTable* detect_best() {
#if defined(__x86_64__) || defined(_M_X64)
#if defined(__GNUC__)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    if (const KernelTable* t = table_avx2()) return t;
  }
#endif
#endif
  if (const KernelTable* t = table_neon()) return t;
  return table_scalar();
}

const KernelTable* resolve(std::string_view name) {
  if (name == "auto") return detect_best();
  if (name == "scalar") return table_scalar();
  if (name == "avx2") {
    if (const KernelTable* t = table_avx2()) return t;
    throw std::runtime_error("simd: avx2 kernels not available on this build/CPU");
  }
  if (name == "neon") {
    if (const KernelTable* t = table_neon()) return t;
    throw std::runtime_error("simd: neon kernels not available on this build/CPU");
  }
  throw std::runtime_error("simd: unknown kernel set '" + std::string(name) + "'");
}

const KernelTable*& active_slot() {
  static const KernelTable* active = [] {
    if (const char* env = std::getenv("SI_SIMD")) return resolve(env);
    return detect_best();
  }();
  return active;
}

}  // namespace

const KernelTable& kernels() { return *active_slot(); }

const KernelTable& kernels_named(std::string_view name) { return *resolve(name); }

void select_kernels(std::string_view name) { active_slot() = resolve(name); }

std::vector<std::string> available_kernels() {
  std::vector<std::string> out{"scalar"};
  if (table_avx2()) out.push_back("avx2");
  if (table_neon()) out.push_back("neon");
  return out;
}

}  // namespace si::simd
