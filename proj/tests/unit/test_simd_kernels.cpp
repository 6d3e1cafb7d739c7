#include <cmath>
#include <vector>

#include "doctest.h"
#include "oal/core/rng.hpp"
#include "oal/simd/kernels.hpp"

using namespace oal;

namespace {

std::vector<const simd::KernelTable*> vector_tables() {
    std::vector<const simd::KernelTable*> out;
    if (auto* t = simd::avx2_kernels()) out.push_back(t);
    if (auto* t = simd::neon_kernels()) out.push_back(t);
    return out;
}

std::vector<double> random_vec(RngStream& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-3.0, 3.0);
    return v;
}

}  // namespace

TEST_CASE("active table is one of the known variants") {
    const auto name = simd::active().name;
    CHECK((name == "scalar" || name == "avx2" || name == "neon"));
    MESSAGE("active kernels: " << name);
}

TEST_CASE("vector kernels agree with the scalar reference") {
    const auto& ref = simd::scalar_kernels();
    RngStream rng(7, "simd-equivalence");
    for (const auto* table : vector_tables()) {
        CAPTURE(table->name);
        for (std::size_t n = 0; n <= 67; ++n) {
            auto a = random_vec(rng, n);
            auto b = random_vec(rng, n);
            double scale = 0.0;
            for (std::size_t i = 0; i < n; ++i) scale += std::abs(a[i] * b[i]) + (a[i] - b[i]) * (a[i] - b[i]);
            const double tol = 1e-14 * (scale + 1.0);
            CHECK(std::abs(table->dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= tol);
            CHECK(std::abs(table->squared_distance(a.data(), b.data(), n) -
                           ref.squared_distance(a.data(), b.data(), n)) <= tol);

            auto y1 = random_vec(rng, n);
            auto y2 = y1;
            table->axpy(0.37, a.data(), y1.data(), n);
            ref.axpy(0.37, a.data(), y2.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-14 * (std::abs(y2[i]) + 1.0));
        }
    }
}

TEST_CASE("vector kernels are exact on small-integer data") {
    // Every partial sum is an exactly representable integer, so summation order cannot matter.
    const auto& ref = simd::scalar_kernels();
    RngStream rng(11, "simd-int");
    for (const auto* table : vector_tables()) {
        for (std::size_t n : {1u, 4u, 5u, 8u, 13u, 64u}) {
            std::vector<double> a(n), b(n);
            for (std::size_t i = 0; i < n; ++i) {
                a[i] = static_cast<double>(static_cast<int>(rng.index(21)) - 10);
                b[i] = static_cast<double>(static_cast<int>(rng.index(21)) - 10);
            }
            CHECK(table->dot(a.data(), b.data(), n) == ref.dot(a.data(), b.data(), n));
            CHECK(table->squared_distance(a.data(), b.data(), n) == ref.squared_distance(a.data(), b.data(), n));
        }
    }
}

TEST_CASE("batched squared distances match the single-row kernel") {
    RngStream rng(3, "simd-batch");
    const std::size_t rows = 9, n = 11, stride = 13;
    std::vector<double> bank(rows * stride);
    for (double& x : bank) x = rng.normal();
    auto q = random_vec(rng, n);
    for (const auto* table : {&simd::scalar_kernels(), simd::avx2_kernels(), simd::neon_kernels()}) {
        if (table == nullptr) continue;
        std::vector<double> out(rows);
        table->squared_distances(q.data(), bank.data(), rows, n, stride, out.data());
        for (std::size_t r = 0; r < rows; ++r)
            CHECK(out[r] == table->squared_distance(q.data(), bank.data() + r * stride, n));
    }
}
