#include "oal/simd/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace oal::simd {

namespace detail {
#if defined(OAL_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(OAL_HAVE_NEON)
const KernelTable& neon_table();
#endif
}  // namespace detail

const KernelTable* avx2_kernels() {
#if defined(OAL_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &detail::avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(OAL_HAVE_NEON)
    return &detail::neon_table();  // baseline on aarch64
#else
    return nullptr;
#endif
}

namespace {

const KernelTable& select() {
    if (const char* env = std::getenv("OAL_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
        return scalar_kernels();
    }
    if (const KernelTable* t = avx2_kernels()) return *t;
    if (const KernelTable* t = neon_kernels()) return *t;
    return scalar_kernels();
}

}  // namespace

const KernelTable& active() {
    static const KernelTable& table = select();
    return table;
}

}  // namespace oal::simd
