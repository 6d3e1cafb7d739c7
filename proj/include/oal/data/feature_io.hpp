#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "oal/core/matrix.hpp"
#include "oal/data/artifact.hpp"

namespace oal {

// Labeled vectors as exchanged through the feature JSONL format:
//   {"label": <int>, "vec": [<float>, ...]}
// one record per line, constant width per file. Label -1 marks unlabeled rows.
struct FeatureSet {
    std::vector<long> labels;
    Matrix vectors;
    bool normalized = false;
    std::optional<ArtifactMeta> meta;

    std::size_t size() const { return labels.size(); }
    std::size_t width() const { return vectors.cols(); }
};

// Throws std::runtime_error naming the 1-based line number on malformed
// records or inconsistent widths. An empty file yields an empty set.
FeatureSet load_features(const std::filesystem::path& path);
void save_features(const FeatureSet& set, const std::filesystem::path& path);

// L2-normalizes each row (zero rows stay zero) and marks the set normalized.
FeatureSet normalize_rows(FeatureSet set);
void normalize_rows_inplace(Matrix& m);

}  // namespace oal
