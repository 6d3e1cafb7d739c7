#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "oal/core/matrix.hpp"

namespace oal {

enum class Split { Train, Val, Test };
const char* to_string(Split s);

// Labeled inputs with a split tag per row. Labels are 0-based class indices.
struct LabeledDataset {
    std::size_t classes = 0;
    Matrix inputs;
    std::vector<std::size_t> labels;
    std::vector<Split> splits;
    // Generating class means (classes x dim); empty when the data came from a file.
    Matrix class_means;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return inputs.cols(); }
    LabeledDataset subset(Split s) const;
    void validate() const;
};

// Generator means if present, otherwise per-class means of the train split.
Matrix class_means(const LabeledDataset& data);

struct MixtureConfig {
    std::size_t classes = 5;
    std::size_t dim = 8;
    std::size_t train_per_class = 200;
    std::size_t val_per_class = 50;
    std::size_t test_per_class = 200;
    double separation = 4.0;  // pairwise distance between class means
    double spread = 1.0;      // isotropic standard deviation within a class
};

// Class c ~ N(mu_c, spread^2 I). The means are the vertices of a regular
// simplex with edge length `separation`, centred at the origin. Requires
// classes <= dim. Rows are ordered split-major, then class, then draw.
LabeledDataset gen_id_mixture(const MixtureConfig& cfg, std::uint64_t seed);

enum class OodKind { ShiftedCluster, UniformBox, Shell };
const char* to_string(OodKind k);
OodKind ood_kind_from_string(const std::string& s);

struct OodTestSet {
    std::string name;
    OodKind kind = OodKind::ShiftedCluster;
    Matrix inputs;
    std::string descriptor;
    double margin = 0.0;  // every input is farther than this from every class mean
};

struct OodConfig {
    std::vector<OodKind> kinds{OodKind::ShiftedCluster, OodKind::UniformBox, OodKind::Shell};
    std::size_t samples_per_set = 500;
    double near_margin = 1.5;
    double far_margin = 4.0;
    double box_scale = 2.0;    // box half-width as a multiple of the ID extent
    double shell_scale = 3.0;  // shell radius as a multiple of the ID extent
    std::size_t max_attempts_factor = 200;
};

// Near-OOD ("shifted-cluster") is a missing class: a Gaussian with the ID
// spread centred at the point orthogonal to the class-mean simplex that sits
// `separation` away from every mean. Far-OOD sets are a uniform box and a
// thin spherical shell around the ID centroid. Throws std::runtime_error when
// rejection sampling cannot satisfy the margin.
std::vector<OodTestSet> gen_ood_sets(const LabeledDataset& id, const OodConfig& cfg, double spread,
                                     std::uint64_t seed);

// Smallest Euclidean distance from `x` to any row of `means` (brute force).
double min_distance_to_means(std::span<const double> x, const Matrix& means);

}  // namespace oal
