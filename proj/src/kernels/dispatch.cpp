#include <cstdio>
#include <cstdlib>
#include <string_view>

#include "draftval/kernels.hpp"

namespace draftval::kernels {

const KernelSet* avx2_kernels() {
#if defined(DRAFTVAL_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &detail::avx2_kernel_set() : nullptr;
#else
  return nullptr;
#endif
}

const KernelSet& active_kernels() {
  static const KernelSet* chosen = [] {
    const char* env = std::getenv("DRAFTVAL_SIMD");
    const std::string_view request = env != nullptr ? env : "";
    if (request == "scalar") return &scalar_kernels();
    const KernelSet* wide = avx2_kernels();
    if (request == "avx2" && wide == nullptr) {
      std::fprintf(stderr, "draftval: DRAFTVAL_SIMD=avx2 requested but unavailable; using scalar kernels\n");
    }
    return wide != nullptr ? wide : &scalar_kernels();
  }();
  return *chosen;
}

}  // namespace draftval::kernels
