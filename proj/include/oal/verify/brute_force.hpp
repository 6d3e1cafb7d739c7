#pragma once

// O(n^2) brute-force references for the k-NN selection stages and the OOD
// metrics. They share no code with the fast paths they check.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "oal/core/matrix.hpp"

namespace oal::verify {

inline double bf_distance(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) {
        const double d = a(i, c) - b(j, c);
        s += d * d;
    }
    return std::sqrt(s);
}

inline double bf_knn(const Matrix& queries, std::size_t q, const Matrix& bank, std::size_t k,
                     std::optional<std::size_t> exclude) {
    std::vector<double> all;
    for (std::size_t j = 0; j < bank.rows(); ++j)
        if (!exclude || j != *exclude) all.push_back(bf_distance(queries, q, bank, j));
    std::sort(all.begin(), all.end());
    return all.at(k - 1);
}

// Repeatedly take the largest remaining value; ties go to the smallest index.
inline std::vector<std::size_t> bf_top(const std::vector<double>& values, std::size_t count) {
    std::vector<bool> taken(values.size(), false);
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < count; ++r) {
        std::size_t best = values.size();
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (taken[i]) continue;
            if (best == values.size() || values[i] > values[best]) best = i;
        }
        taken[best] = true;
        out.push_back(best);
    }
    return out;
}

inline std::vector<std::size_t> bf_select_boundary(const Matrix& bank, std::size_t k, std::size_t top) {
    std::vector<double> d;
    for (std::size_t i = 0; i < bank.rows(); ++i) d.push_back(bf_knn(bank, i, bank, k, i));
    return bf_top(d, top);
}

inline std::vector<std::size_t> bf_filter(const Matrix& candidates, const Matrix& bank, std::size_t k, std::size_t l) {
    std::vector<double> d;
    for (std::size_t i = 0; i < candidates.rows(); ++i) d.push_back(bf_knn(candidates, i, bank, k, std::nullopt));
    return bf_top(d, l);
}

// O(n*m) pairwise Mann-Whitney statistic with half-weighted ties.
inline double bf_auroc(std::span<const double> id, std::span<const double> ood) {
    double wins = 0.0;
    for (double a : id)
        for (double b : ood) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
    return wins / (static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

// Sweep every observed value as a threshold; keep the largest with TPR >= 0.95.
inline double bf_fpr95(std::span<const double> id, std::span<const double> ood) {
    std::vector<double> candidates(id.begin(), id.end());
    candidates.insert(candidates.end(), ood.begin(), ood.end());
    bool found = false;
    double best = 0.0;
    for (double alpha : candidates) {
        std::size_t tp = 0;
        for (double v : id) tp += v >= alpha;
        if (static_cast<double>(tp) / static_cast<double>(id.size()) >= 0.95 && (!found || alpha > best)) {
            best = alpha;
            found = true;
        }
    }
    std::size_t fp = 0;
    for (double v : ood) fp += v >= best;
    return static_cast<double>(fp) / static_cast<double>(ood.size());
}

}  // namespace oal::verify
