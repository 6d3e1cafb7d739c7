#include "oal/synth/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "oal/simd/kernels.hpp"

namespace oal {
namespace {

double kth_smallest_sqrt(std::vector<double>& d2, std::size_t k) {
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(k - 1), d2.end());
    return std::sqrt(d2[k - 1]);
}

void check_k(std::size_t k, std::size_t available) {
    if (k == 0 || k > available) {
        throw std::out_of_range("k = " + std::to_string(k) + " out of range for " + std::to_string(available) +
                                " reference points");
    }
}

}  // namespace

double knn_distance(std::span<const double> query, const Matrix& bank, std::size_t k,
                    std::optional<std::size_t> exclude) {
    if (bank.rows() == 0) throw std::invalid_argument("knn_distance: empty bank");
    if (query.size() != bank.cols()) throw std::invalid_argument("knn_distance: query width does not match bank");
    if (exclude && *exclude >= bank.rows()) throw std::out_of_range("knn_distance: excluded index out of range");
    const std::size_t available = bank.rows() - (exclude ? 1 : 0);
    check_k(k, available);
    std::vector<double> d2(bank.rows());
    simd::active().squared_distances(query.data(), bank.data(), bank.rows(), bank.cols(), bank.cols(), d2.data());
    if (exclude) d2.erase(d2.begin() + static_cast<std::ptrdiff_t>(*exclude));
    return kth_smallest_sqrt(d2, k);
}

Vector self_knn_distances(const Matrix& bank, std::size_t k) {
    if (bank.rows() == 0) throw std::invalid_argument("self_knn_distances: empty bank");
    check_k(k, bank.rows() - 1);
    Vector out(bank.rows());
    std::vector<double> d2(bank.rows());
    const auto& kern = simd::active();
    for (std::size_t i = 0; i < bank.rows(); ++i) {
        d2.resize(bank.rows());
        kern.squared_distances(bank.row(i).data(), bank.data(), bank.rows(), bank.cols(), bank.cols(), d2.data());
        d2.erase(d2.begin() + static_cast<std::ptrdiff_t>(i));
        out[i] = kth_smallest_sqrt(d2, k);
    }
    return out;
}

Vector knn_distances(const Matrix& queries, const Matrix& bank, std::size_t k) {
    if (bank.rows() == 0) throw std::invalid_argument("knn_distances: empty bank");
    if (queries.cols() != bank.cols()) throw std::invalid_argument("knn_distances: query width does not match bank");
    check_k(k, bank.rows());
    Vector out(queries.rows());
    std::vector<double> d2(bank.rows());
    const auto& kern = simd::active();
    for (std::size_t i = 0; i < queries.rows(); ++i) {
        kern.squared_distances(queries.row(i).data(), bank.data(), bank.rows(), bank.cols(), bank.cols(), d2.data());
        out[i] = kth_smallest_sqrt(d2, k);
    }
    return out;
}

std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t count) {
    if (count > values.size()) {
        throw std::out_of_range("cannot select " + std::to_string(count) + " of " + std::to_string(values.size()) +
                                " values");
    }
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    idx.resize(count);
    return idx;
}

}  // namespace oal
