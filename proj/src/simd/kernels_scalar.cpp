#include "oal/simd/kernels.hpp"

namespace oal::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void squared_distances_scalar(const double* query, const double* rows, std::size_t count,
                              std::size_t n, std::size_t stride, double* out) {
    for (std::size_t r = 0; r < count; ++r) out[r] = squared_distance_scalar(query, rows + r * stride, n);
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{"scalar", &dot_scalar, &squared_distance_scalar, &axpy_scalar,
                                   &squared_distances_scalar};
    return table;
}

}  // namespace oal::simd
