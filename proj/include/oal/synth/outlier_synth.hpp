#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "oal/core/matrix.hpp"
#include "oal/core/rng.hpp"

namespace oal {

// Teacher ID features, each row L2-normalized, with class labels.
struct NormalizedFeatureBank {
    Matrix z;
    std::vector<std::size_t> labels;
    std::size_t classes = 0;

    // Normalizes `raw` row-wise. Zero rows are rejected.
    static NormalizedFeatureBank from_raw(Matrix raw, std::vector<std::size_t> labels, std::size_t classes);
    std::vector<std::size_t> class_indices(std::size_t c) const;
};

// Selected boundary centres, ranked by k-NN distance (largest first).
struct BoundarySelection {
    std::vector<std::size_t> indices;  // rows of the bank that was searched
    Vector distances;
};

struct BoundarySet {
    std::vector<BoundarySelection> per_class;  // indices refer to NormalizedFeatureBank::z
};

// The `top` rows with the largest self-excluded k-NN distance within `bank`.
BoundarySelection select_boundary(const Matrix& bank, std::size_t k, std::size_t top);

// select_boundary run on each class's rows separately.
BoundarySet select_boundary_per_class(const NormalizedFeatureBank& bank, std::size_t k, std::size_t top);

// class_norm * center; class_norm must be positive.
Vector scale_center(std::span<const double> center, double class_norm);

// m i.i.d. draws from N(center, sigma^2 I), one per row.
Matrix sample_kernel(std::span<const double> center, double sigma, std::size_t m, RngStream& rng);

// The l candidates with the largest k-NN distance to `bank` (no exclusion).
BoundarySelection filter_top_knn(const Matrix& candidates, const Matrix& bank, std::size_t k, std::size_t l);

struct SynthConfig {
    std::size_t k = 10;            // neighbour rank for both k-NN passes
    std::size_t top = 20;          // boundary centres per class
    double sigma = 0.1;            // kernel width in normalized-feature units
    std::size_t candidates = 200;  // draws per centre
    std::size_t keep = 60;         // outliers kept per class
    void validate() const;
};

// Synthesized outliers. `embeddings` holds the k-NN sampled outliers in
// teacher feature space; `latent_features` the mean-reduced generator latents.
struct OutlierBank {
    Matrix embeddings;
    std::vector<std::size_t> embedding_classes;
    Matrix latent_features;
    std::vector<std::size_t> latent_classes;

    Matrix class_embeddings(std::size_t c) const;
};

// Per class: select_boundary -> scale_center -> sample_kernel -> filter_top_knn.
// Class c draws from rng.child("class", c) so classes are independent of
// processing order.
OutlierBank synthesize_outliers(const NormalizedFeatureBank& bank, std::span<const double> class_norms,
                                const SynthConfig& cfg, const RngStream& rng);

}  // namespace oal
