#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "oal/core/matrix.hpp"

namespace oal {

// Euclidean distance from `query` to its k-th nearest row of `bank` (k >= 1).
// `exclude` removes one bank row by index (the query itself when it is a bank
// member); duplicates of the query elsewhere in the bank still count.
double knn_distance(std::span<const double> query, const Matrix& bank, std::size_t k,
                    std::optional<std::size_t> exclude = std::nullopt);

// Self-excluded k-NN distance of every bank row.
Vector self_knn_distances(const Matrix& bank, std::size_t k);

// k-NN distance of every query row to the bank, no exclusion.
Vector knn_distances(const Matrix& queries, const Matrix& bank, std::size_t k);

// Indices of the `count` largest values, largest first; equal values are
// ordered by ascending index.
std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t count);

}  // namespace oal
