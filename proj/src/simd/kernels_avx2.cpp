// Compiled with -mavx2 -mfma on x86-64 only; see src/CMakeLists.txt.
#include "kernels_impl.hpp"

namespace si::simd {

#if defined(__AVX2__) && defined(__FMA__)
const KernelTable* table_avx2() {
  static const KernelTable t = impl::make_table<PackAvx2>("avx2");
  return &t;
}
#else
const KernelTable* table_avx2() { return nullptr; }
#endif

}  // namespace si::simd
