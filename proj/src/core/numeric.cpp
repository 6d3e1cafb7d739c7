#include "oal/core/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace oal {

double log_sum_exp(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("log_sum_exp of empty vector");
    const double m = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

Vector softmax(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("softmax of empty vector");
    const double m = *std::max_element(v.begin(), v.end());
    Vector out(v.size());
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        s += out[i];
    }
    for (double& x : out) x /= s;
    return out;
}

Vector log_softmax(std::span<const double> v) {
    const double lse = log_sum_exp(v);
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - lse;
    return out;
}

double kl_div(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("kl_div dimension mismatch: " + std::to_string(p.size()) + " vs " +
                                    std::to_string(q.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        s += p[i] * (std::log(p[i]) - std::log(std::max(q[i], kProbFloor)));
    }
    return std::max(s, 0.0);
}

double cross_entropy(std::span<const double> logits, std::size_t label) {
    if (label >= logits.size()) {
        throw std::out_of_range("label " + std::to_string(label) + " out of range for " +
                                std::to_string(logits.size()) + " classes");
    }
    return log_sum_exp(logits) - logits[label];
}

std::size_t argmax(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("argmax of empty vector");
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace oal
