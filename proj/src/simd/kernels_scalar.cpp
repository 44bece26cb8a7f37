#include "kernels_impl.hpp"

namespace si::simd {

const KernelTable* table_scalar() {
  static const KernelTable t = impl::make_table<PackScalar>("scalar");
  return &t;
}

}  // namespace si::simd
