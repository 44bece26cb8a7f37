#include "kernels_impl.hpp"

namespace si::simd {

#if defined(__aarch64__)
const KernelTable* table_neon() {
  static const KernelTable t = impl::make_table<PackNeon>("neon");
  return &t;
}
#else
const KernelTable* table_neon() { return nullptr; }
#endif

}  // namespace si::simd
