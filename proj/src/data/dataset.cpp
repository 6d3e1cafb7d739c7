#include "oal/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "oal/core/numeric.hpp"
#include "oal/core/rng.hpp"
#include "oal/simd/kernels.hpp"

namespace oal {

const char* to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "train";
}

LabeledDataset LabeledDataset::subset(Split s) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < splits.size(); ++i)
        if (splits[i] == s) idx.push_back(i);
    LabeledDataset out;
    out.classes = classes;
    out.inputs = gather_rows(inputs, idx);
    out.class_means = class_means;
    for (std::size_t i : idx) {
        out.labels.push_back(labels[i]);
        out.splits.push_back(s);
    }
    return out;
}

void LabeledDataset::validate() const {
    if (inputs.rows() != labels.size() || splits.size() != labels.size()) {
        throw std::invalid_argument("dataset: inputs, labels and splits disagree in length");
    }
    for (std::size_t l : labels)
        if (l >= classes) throw std::invalid_argument("dataset: label " + std::to_string(l) + " out of range");
}

Matrix class_means(const LabeledDataset& data) {
    if (!data.class_means.empty()) return data.class_means;
    Matrix means(data.classes, data.dim());
    std::vector<std::size_t> counts(data.classes, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.splits[i] != Split::Train) continue;
        auto row = data.inputs.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) means(data.labels[i], j) += row[j];
        ++counts[data.labels[i]];
    }
    for (std::size_t c = 0; c < data.classes; ++c)
        for (std::size_t j = 0; j < data.dim(); ++j) means(c, j) /= std::max<std::size_t>(counts[c], 1);
    return means;
}

LabeledDataset gen_id_mixture(const MixtureConfig& cfg, std::uint64_t seed) {
    if (cfg.classes < 2) throw std::invalid_argument("gen_id_mixture: need at least 2 classes");
    if (cfg.dim < cfg.classes) throw std::invalid_argument("gen_id_mixture: dim must be >= class count");
    if (cfg.train_per_class < 1) throw std::invalid_argument("gen_id_mixture: need at least 1 sample per class");
    if (cfg.spread < 0.0 || cfg.separation <= 0.0) throw std::invalid_argument("gen_id_mixture: invalid spread or separation");

    LabeledDataset data;
    data.classes = cfg.classes;
    data.class_means = Matrix(cfg.classes, cfg.dim);
    // e_c minus the centroid, scaled so |e_i - e_j| = separation.
    const double s = cfg.separation / std::sqrt(2.0);
    for (std::size_t c = 0; c < cfg.classes; ++c)
        for (std::size_t j = 0; j < cfg.classes; ++j)
            data.class_means(c, j) = s * ((c == j ? 1.0 : 0.0) - 1.0 / static_cast<double>(cfg.classes));

    const std::size_t per_class = cfg.train_per_class + cfg.val_per_class + cfg.test_per_class;
    data.inputs = Matrix(per_class * cfg.classes, cfg.dim);
    RngStream root(seed, "gen-id-mixture");
    std::size_t row = 0;
    const std::pair<Split, std::size_t> parts[] = {
        {Split::Train, cfg.train_per_class}, {Split::Val, cfg.val_per_class}, {Split::Test, cfg.test_per_class}};
    for (const auto& [split, count] : parts) {
        for (std::size_t c = 0; c < cfg.classes; ++c) {
            RngStream rng = root.child(to_string(split), c);
            for (std::size_t i = 0; i < count; ++i, ++row) {
                for (std::size_t j = 0; j < cfg.dim; ++j) {
                    data.inputs(row, j) = data.class_means(c, j) + cfg.spread * rng.normal();
                }
                data.labels.push_back(c);
                data.splits.push_back(split);
            }
        }
    }
    return data;
}

const char* to_string(OodKind k) {
    switch (k) {
        case OodKind::ShiftedCluster: return "shifted-cluster";
        case OodKind::UniformBox: return "uniform-box";
        case OodKind::Shell: return "shell";
    }
    return "shifted-cluster";
}

OodKind ood_kind_from_string(const std::string& s) {
    if (s == "shifted-cluster") return OodKind::ShiftedCluster;
    if (s == "uniform-box") return OodKind::UniformBox;
    if (s == "shell") return OodKind::Shell;
    throw std::invalid_argument("unknown OOD kind '" + s + "'");
}

double min_distance_to_means(std::span<const double> x, const Matrix& means) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < means.rows(); ++c) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double d = x[j] - means(c, j);
            d2 += d * d;
        }
        best = std::min(best, std::sqrt(d2));
    }
    return best;
}

namespace {

struct Geometry {
    Vector centroid;
    double mean_radius = 0.0;      // largest distance from centroid to a class mean
    double extent = 0.0;           // largest distance from centroid to any ID input
    double mean_pair_distance = 0.0;
};

Geometry geometry(const LabeledDataset& id, const Matrix& means) {
    Geometry g;
    const std::size_t dim = means.cols();
    g.centroid.assign(dim, 0.0);
    for (std::size_t c = 0; c < means.rows(); ++c)
        for (std::size_t j = 0; j < dim; ++j) g.centroid[j] += means(c, j) / static_cast<double>(means.rows());
    for (std::size_t c = 0; c < means.rows(); ++c)
        g.mean_radius = std::max(g.mean_radius, std::sqrt(simd::scalar_kernels().squared_distance(
                                                    means.row(c).data(), g.centroid.data(), dim)));
    for (std::size_t i = 0; i < id.inputs.rows(); ++i)
        g.extent = std::max(g.extent, std::sqrt(simd::scalar_kernels().squared_distance(
                                          id.inputs.row(i).data(), g.centroid.data(), dim)));
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < means.rows(); ++a)
        for (std::size_t b = a + 1; b < means.rows(); ++b, ++pairs)
            total += std::sqrt(simd::scalar_kernels().squared_distance(means.row(a).data(), means.row(b).data(), dim));
    g.mean_pair_distance = pairs ? total / static_cast<double>(pairs) : 1.0;
    return g;
}

// Unit vector orthogonal to every (mean_c - centroid).
Vector orthogonal_direction(const Matrix& means, const Vector& centroid, RngStream& rng) {
    const std::size_t dim = means.cols();
    std::vector<Vector> basis;
    for (std::size_t c = 0; c < means.rows(); ++c) {
        Vector v(dim);
        for (std::size_t j = 0; j < dim; ++j) v[j] = means(c, j) - centroid[j];
        for (const Vector& b : basis) {
            double p = 0.0;
            for (std::size_t j = 0; j < dim; ++j) p += v[j] * b[j];
            for (std::size_t j = 0; j < dim; ++j) v[j] -= p * b[j];
        }
        const double n = l2_norm(v);
        if (n > 1e-9) {
            for (double& x : v) x /= n;
            basis.push_back(std::move(v));
        }
    }
    for (int attempt = 0; attempt < 16; ++attempt) {
        Vector v(dim);
        for (double& x : v) x = rng.normal();
        for (const Vector& b : basis) {
            double p = 0.0;
            for (std::size_t j = 0; j < dim; ++j) p += v[j] * b[j];
            for (std::size_t j = 0; j < dim; ++j) v[j] -= p * b[j];
        }
        const double n = l2_norm(v);
        if (n > 1e-6) {
            for (double& x : v) x /= n;
            return v;
        }
    }
    throw std::runtime_error("shifted-cluster: no direction orthogonal to the class means (dim too small)");
}

template <class Draw>
OodTestSet rejection_sample(OodKind kind, std::string descriptor, double margin, const Matrix& means,
                            const OodConfig& cfg, Draw draw) {
    OodTestSet set;
    set.kind = kind;
    set.name = to_string(kind);
    set.descriptor = std::move(descriptor);
    set.margin = margin;
    set.inputs = Matrix(cfg.samples_per_set, means.cols());
    const std::size_t max_attempts = std::max<std::size_t>(cfg.samples_per_set, 1) * cfg.max_attempts_factor;
    std::size_t accepted = 0, attempts = 0;
    Vector x(means.cols());
    while (accepted < cfg.samples_per_set) {
        if (++attempts > max_attempts) {
            throw std::runtime_error(std::string("margin ") + std::to_string(margin) + " unsatisfiable for OOD kind " +
                                     to_string(kind));
        }
        draw(x);
        if (min_distance_to_means(x, means) > margin) {
            std::copy(x.begin(), x.end(), set.inputs.row(accepted).data());
            ++accepted;
        }
    }
    return set;
}

}  // namespace

std::vector<OodTestSet> gen_ood_sets(const LabeledDataset& id, const OodConfig& cfg, double spread,
                                     std::uint64_t seed) {
    std::vector<OodTestSet> out;
    if (cfg.kinds.empty()) return out;
    if (id.size() == 0) throw std::invalid_argument("gen_ood_sets: empty ID dataset");
    const Matrix means = class_means(id);
    const Geometry g = geometry(id, means);
    const std::size_t dim = means.cols();
    RngStream root(seed, "gen-ood-sets");

    for (OodKind kind : cfg.kinds) {
        RngStream rng = root.child(to_string(kind));
        switch (kind) {
            case OodKind::ShiftedCluster: {
                Vector dir = orthogonal_direction(means, g.centroid, rng);
                const double sep = g.mean_pair_distance;
                const double h2 = sep * sep - g.mean_radius * g.mean_radius;
                const double offset = h2 > 0.0 ? std::sqrt(h2) : sep;
                Vector center(dim);
                for (std::size_t j = 0; j < dim; ++j) center[j] = g.centroid[j] + offset * dir[j];
                const double sd = spread > 0.0 ? spread : 1.0;
                out.push_back(rejection_sample(kind, "gaussian centre offset " + std::to_string(offset) + " sd " +
                                                         std::to_string(sd),
                                               cfg.near_margin, means, cfg, [&](Vector& x) {
                                                   for (std::size_t j = 0; j < dim; ++j) x[j] = center[j] + sd * rng.normal();
                                               }));
                break;
            }
            case OodKind::UniformBox: {
                const double half = cfg.box_scale * g.extent;
                out.push_back(rejection_sample(kind, "uniform box half-width " + std::to_string(half), cfg.far_margin,
                                               means, cfg, [&](Vector& x) {
                                                   for (std::size_t j = 0; j < dim; ++j)
                                                       x[j] = g.centroid[j] + rng.uniform(-half, half);
                                               }));
                break;
            }
            case OodKind::Shell: {
                const double radius = cfg.shell_scale * g.extent;
                out.push_back(rejection_sample(kind, "shell radius " + std::to_string(radius), cfg.far_margin, means,
                                               cfg, [&](Vector& x) {
                                                   for (std::size_t j = 0; j < dim; ++j) x[j] = rng.normal();
                                                   const double n = l2_norm(x);
                                                   const double r = radius * (1.0 + 0.05 * rng.uniform());
                                                   for (std::size_t j = 0; j < dim; ++j) x[j] = g.centroid[j] + r * x[j] / n;
                                               }));
                break;
            }
        }
    }
    return out;
}

}  // namespace oal
