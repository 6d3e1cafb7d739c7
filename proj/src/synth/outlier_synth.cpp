#include "oal/synth/outlier_synth.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "oal/synth/knn.hpp"

namespace oal {

NormalizedFeatureBank NormalizedFeatureBank::from_raw(Matrix raw, std::vector<std::size_t> labels, std::size_t classes) {
    if (raw.rows() != labels.size()) throw std::invalid_argument("feature bank: labels do not match rows");
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        auto r = raw.row(i);
        double s = 0.0;
        for (double v : r) s += v * v;
        if (s == 0.0) throw std::invalid_argument("feature bank: zero feature vector at row " + std::to_string(i));
        const double n = std::sqrt(s);
        for (double& v : r) v /= n;
    }
    for (std::size_t l : labels)
        if (l >= classes) throw std::invalid_argument("feature bank: label out of range");
    return NormalizedFeatureBank{std::move(raw), std::move(labels), classes};
}

std::vector<std::size_t> NormalizedFeatureBank::class_indices(std::size_t c) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == c) out.push_back(i);
    return out;
}

BoundarySelection select_boundary(const Matrix& bank, std::size_t k, std::size_t top) {
    if (top > bank.rows()) {
        throw std::out_of_range("select_boundary: top = " + std::to_string(top) + " exceeds bank size " +
                                std::to_string(bank.rows()));
    }
    Vector d = self_knn_distances(bank, k);
    BoundarySelection sel;
    sel.indices = top_indices(d, top);
    for (std::size_t i : sel.indices) sel.distances.push_back(d[i]);
    return sel;
}

BoundarySet select_boundary_per_class(const NormalizedFeatureBank& bank, std::size_t k, std::size_t top) {
    BoundarySet out;
    for (std::size_t c = 0; c < bank.classes; ++c) {
        auto rows = bank.class_indices(c);
        BoundarySelection local = select_boundary(gather_rows(bank.z, rows), k, top);
        for (std::size_t& i : local.indices) i = rows[i];
        out.per_class.push_back(std::move(local));
    }
    return out;
}

Vector scale_center(std::span<const double> center, double class_norm) {
    if (!(class_norm > 0.0)) throw std::invalid_argument("scale_center: class norm must be positive");
    Vector out(center.begin(), center.end());
    for (double& v : out) v *= class_norm;
    return out;
}

Matrix sample_kernel(std::span<const double> center, double sigma, std::size_t m, RngStream& rng) {
    if (sigma < 0.0) throw std::invalid_argument("sample_kernel: sigma must be non-negative");
    if (m == 0) throw std::invalid_argument("sample_kernel: need at least one draw");
    Matrix out(m, center.size());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < center.size(); ++j) out(i, j) = center[j] + sigma * rng.normal();
    return out;
}

BoundarySelection filter_top_knn(const Matrix& candidates, const Matrix& bank, std::size_t k, std::size_t l) {
    if (l > candidates.rows()) {
        throw std::out_of_range("filter_top_knn: l = " + std::to_string(l) + " exceeds candidate count " +
                                std::to_string(candidates.rows()));
    }
    Vector d = knn_distances(candidates, bank, k);
    BoundarySelection sel;
    sel.indices = top_indices(d, l);
    for (std::size_t i : sel.indices) sel.distances.push_back(d[i]);
    return sel;
}

void SynthConfig::validate() const {
    if (k == 0) throw std::invalid_argument("synth: k must be positive");
    if (top == 0) throw std::invalid_argument("synth: top must be positive");
    if (sigma < 0.0) throw std::invalid_argument("synth: sigma must be non-negative");
    if (candidates == 0) throw std::invalid_argument("synth: candidates must be positive");
    if (keep == 0 || keep > top * candidates) throw std::invalid_argument("synth: keep must be in [1, top * candidates]");
}

Matrix OutlierBank::class_embeddings(std::size_t c) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < embedding_classes.size(); ++i)
        if (embedding_classes[i] == c) rows.push_back(i);
    return gather_rows(embeddings, rows);
}

OutlierBank synthesize_outliers(const NormalizedFeatureBank& bank, std::span<const double> class_norms,
                                const SynthConfig& cfg, const RngStream& rng) {
    cfg.validate();
    if (class_norms.size() != bank.classes) throw std::invalid_argument("synth: one class norm per class required");
    const std::size_t dim = bank.z.cols();
    OutlierBank out;
    out.embeddings = Matrix(bank.classes * cfg.keep, dim);
    BoundarySet boundary = select_boundary_per_class(bank, cfg.k, cfg.top);
    std::size_t row = 0;
    for (std::size_t c = 0; c < bank.classes; ++c) {
        RngStream class_rng = rng.child("class", c);
        const auto& centres = boundary.per_class[c].indices;
        Matrix pool(centres.size() * cfg.candidates, dim);
        for (std::size_t i = 0; i < centres.size(); ++i) {
            Vector centre = scale_center(bank.z.row(centres[i]), class_norms[c]);
            Matrix draws = sample_kernel(centre, cfg.sigma, cfg.candidates, class_rng);
            std::copy(draws.values().begin(), draws.values().end(), pool.row(i * cfg.candidates).data());
        }
        BoundarySelection kept = filter_top_knn(pool, bank.z, cfg.k, cfg.keep);
        for (std::size_t i : kept.indices) {
            std::copy_n(pool.row(i).data(), dim, out.embeddings.row(row++).data());
            out.embedding_classes.push_back(c);
        }
    }
    return out;
}

}  // namespace oal
