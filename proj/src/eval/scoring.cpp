#include "oal/eval/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "oal/core/numeric.hpp"
#include "oal/synth/knn.hpp"
#include "oal/train/student.hpp"

namespace oal {

std::string to_string(ScoreKind k) {
    switch (k) {
        case ScoreKind::Msp: return "msp";
        case ScoreKind::Ebo: return "ebo";
        case ScoreKind::Gen: return "gen";
        case ScoreKind::Knn: return "knn";
    }
    return "?";
}

ScoreKind score_kind_from_string(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "msp") return ScoreKind::Msp;
    if (lower == "ebo" || lower == "energy") return ScoreKind::Ebo;
    if (lower == "gen") return ScoreKind::Gen;
    if (lower == "knn") return ScoreKind::Knn;
    throw std::invalid_argument("unknown score '" + std::string(s) + "' (expected msp, ebo, gen or knn)");
}

void ScoreSpec::validate() const {
    if (!(temperature > 0.0)) throw std::invalid_argument("EBO temperature must be > 0");
    if (!(gen_gamma > 0.0 && gen_gamma < 1.0)) throw std::invalid_argument("GEN gamma must lie in (0, 1)");
    if (knn_k == 0) throw std::invalid_argument("KNN k must be >= 1");
}

double msp_score(std::span<const double> logits) {
    const Vector p = softmax(logits);
    return *std::max_element(p.begin(), p.end());
}

double ebo_score(std::span<const double> logits, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("EBO temperature must be > 0");
    if (temperature == 1.0) return log_sum_exp(logits);
    Vector scaled(logits.begin(), logits.end());
    for (double& v : scaled) v /= temperature;
    return temperature * log_sum_exp(scaled);
}

double gen_score(std::span<const double> probs, double gamma, std::size_t top) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("GEN gamma must lie in (0, 1)");
    if (probs.empty()) throw std::invalid_argument("gen_score: empty probability vector");
    const std::size_t m = top == 0 ? probs.size() : std::min(top, probs.size());
    Vector sorted(probs.begin(), probs.end());
    std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m), sorted.end(), std::greater<>());
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += std::pow(sorted[i], gamma) * std::pow(1.0 - sorted[i], gamma);
    return -s;
}

double knn_score(std::span<const double> feature, const Matrix& normalized_bank, std::size_t k) {
    Vector q(feature.begin(), feature.end());
    const double n = l2_norm(q);
    if (n > 0.0)
        for (double& v : q) v /= n;
    return -knn_distance(q, normalized_bank, k);
}

Decision decide(double score, double alpha) { return score >= alpha ? Decision::Id : Decision::Ood; }

Vector compute_scores(const ScoreSpec& spec, const StudentModel& model, const Matrix& x, const Matrix* knn_bank) {
    spec.validate();
    Vector out(x.rows());
    if (spec.kind == ScoreKind::Knn) {
        if (knn_bank == nullptr || knn_bank->rows() == 0) throw std::invalid_argument("KNN score needs a feature bank");
        const Matrix f = model.features(x);
        for (std::size_t i = 0; i < f.rows(); ++i) out[i] = knn_score(f.row(i), *knn_bank, spec.knn_k);
        return out;
    }
    const Matrix logits = model.logits(x);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        switch (spec.kind) {
            case ScoreKind::Msp: out[i] = msp_score(logits.row(i)); break;
            case ScoreKind::Ebo: out[i] = ebo_score(logits.row(i), spec.temperature); break;
            case ScoreKind::Gen: out[i] = gen_score(softmax(logits.row(i)), spec.gen_gamma, spec.gen_top); break;
            case ScoreKind::Knn: break;
        }
    }
    return out;
}

namespace {

void require_scores(std::span<const double> id, std::span<const double> ood, const char* what) {
    if (id.empty() || ood.empty()) throw std::invalid_argument(std::string(what) + ": score sets must be non-empty");
    for (double v : id)
        if (std::isnan(v)) throw std::invalid_argument(std::string(what) + ": NaN score");
    for (double v : ood)
        if (std::isnan(v)) throw std::invalid_argument(std::string(what) + ": NaN score");
}

Vector sorted_copy(std::span<const double> v) {
    Vector s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    return s;
}

std::size_t count_at_least(const Vector& sorted, double alpha) {
    return static_cast<std::size_t>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), alpha));
}

}  // namespace

double fpr_at_95_tpr(std::span<const double> id_scores, std::span<const double> ood_scores) {
    require_scores(id_scores, ood_scores, "fpr_at_95_tpr");
    const Vector id = sorted_copy(id_scores);
    const Vector ood = sorted_copy(ood_scores);
    const double n = static_cast<double>(id.size());
    // TPR only changes at ID values, so the largest qualifying threshold is one of them.
    for (std::size_t j = id.size(); j-- > 0;) {
        if (j + 1 < id.size() && id[j] == id[j + 1]) continue;
        if (static_cast<double>(count_at_least(id, id[j])) / n >= 0.95) {
            return static_cast<double>(count_at_least(ood, id[j])) / static_cast<double>(ood.size());
        }
    }
    return 1.0;  // unreachable: the smallest ID value gives TPR 1
}

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
    require_scores(id_scores, ood_scores, "auroc");
    const Vector ood = sorted_copy(ood_scores);
    // Twice the Mann-Whitney count, kept in integers so ties are exact.
    std::uint64_t twice = 0;
    for (double v : id_scores) {
        const auto lo = std::lower_bound(ood.begin(), ood.end(), v);
        const auto hi = std::upper_bound(lo, ood.end(), v);
        twice += 2 * static_cast<std::uint64_t>(lo - ood.begin()) + static_cast<std::uint64_t>(hi - lo);
    }
    return static_cast<double>(twice) /
           (2.0 * static_cast<double>(id_scores.size()) * static_cast<double>(ood_scores.size()));
}

std::size_t Histogram::total() const {
    std::size_t t = 0;
    for (std::size_t c : counts) t += c;
    return t;
}

Histogram score_histogram(std::span<const double> scores, std::size_t bins, double lo, double hi) {
    if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram h;
    h.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / bins;
    h.counts.assign(bins, 0);
    for (double v : scores) {
        if (!std::isfinite(v)) throw std::invalid_argument("histogram: non-finite score");
        const double t = (v - lo) / (hi - lo) * static_cast<double>(bins);
        const auto b = static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(bins - 1)));
        ++h.counts[b];
    }
    return h;
}

Histogram score_histogram(std::span<const double> scores, std::size_t bins) {
    if (scores.empty()) return score_histogram(scores, bins, 0.0, 1.0);
    const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
    return score_histogram(scores, bins, *mn, *mx);
}

}  // namespace oal
