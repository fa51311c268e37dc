#include <cstdlib>
#include <string_view>

#include "dae/kernels.hpp"

namespace dae::kernels {

#if defined(DAE_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(DAE_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& table = [] () -> const KernelTable& {
    const char* env = std::getenv("DAE_KERNELS");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar_kernels();
    if (const KernelTable* simd = avx2_kernels()) return *simd;
    return scalar_kernels();
  }();
  return table;
}

}  // namespace dae::kernels
