#pragma once

#include <cstddef>
#include <span>

#include "oal/core/matrix.hpp"

namespace oal {

// Floor applied inside every log / ratio.
inline constexpr double kProbFloor = 1e-12;

double log_sum_exp(std::span<const double> v);
Vector softmax(std::span<const double> v);
Vector log_softmax(std::span<const double> v);

// KL(p || q) in nats, with q floored at kProbFloor. Terms with p == 0 contribute 0.
double kl_div(std::span<const double> p, std::span<const double> q);

// -log softmax(logits)[label]
double cross_entropy(std::span<const double> logits, std::size_t label);

std::size_t argmax(std::span<const double> v);
double l2_norm(std::span<const double> v);

}  // namespace oal
