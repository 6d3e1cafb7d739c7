#pragma once

// Data-parallel inner loops used by the dense math and the k-NN scans.
//
// Every kernel has a scalar reference implementation. Vectorized variants
// (AVX2+FMA on x86-64, NEON on aarch64) are selected once at startup; set
// OAL_SIMD=scalar in the environment to force the reference path.

#include <cstddef>
#include <string_view>

namespace oal::simd {

struct KernelTable {
    std::string_view name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*squared_distance)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // out[i] = squared_distance(query, rows + i * stride, n) for i in [0, count)
    void (*squared_distances)(const double* query, const double* rows, std::size_t count,
                              std::size_t n, std::size_t stride, double* out);
};

const KernelTable& scalar_kernels();

// nullptr when the variant was not compiled in or the CPU lacks support.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// The table chosen for this process. Selection happens on first call and
// never changes afterwards, so results are reproducible within a build.
const KernelTable& active();

// Rows shorter than a vector register skip the indirect call.
inline constexpr std::size_t kShortRow = 4;

inline double dot(const double* a, const double* b, std::size_t n) {
    if (n < kShortRow) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
        return s;
    }
    return active().dot(a, b, n);
}
inline double squared_distance(const double* a, const double* b, std::size_t n) {
    return active().squared_distance(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    if (n < kShortRow) {
        for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
        return;
    }
    active().axpy(alpha, x, y, n);
}

}  // namespace oal::simd
