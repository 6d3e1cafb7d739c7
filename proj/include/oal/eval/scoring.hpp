#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oal/core/matrix.hpp"

namespace oal {

class StudentModel;

// Every score follows "larger means more ID-like".
enum class ScoreKind { Msp, Ebo, Gen, Knn };
std::string to_string(ScoreKind k);
ScoreKind score_kind_from_string(std::string_view s);

struct ScoreSpec {
    ScoreKind kind = ScoreKind::Ebo;
    double temperature = 1.0;  // EBO
    double gen_gamma = 0.1;    // GEN exponent, in (0, 1)
    std::size_t gen_top = 0;   // GEN: number of largest probabilities; 0 means all classes
    std::size_t knn_k = 10;    // KNN rank

    void validate() const;
};

double msp_score(std::span<const double> logits);
double ebo_score(std::span<const double> logits, double temperature = 1.0);
double gen_score(std::span<const double> probs, double gamma = 0.1, std::size_t top = 0);
// Negated k-th nearest distance from the L2-normalized feature to a bank of normalized rows.
double knn_score(std::span<const double> feature, const Matrix& normalized_bank, std::size_t k);

enum class Decision { Id, Ood };
Decision decide(double score, double alpha);

// Scores every row of x. KNN needs the normalized student train-feature bank.
Vector compute_scores(const ScoreSpec& spec, const StudentModel& model, const Matrix& x,
                      const Matrix* knn_bank = nullptr);

// Threshold = largest observed score alpha with TPR(alpha) >= 0.95; returns FPR at alpha.
double fpr_at_95_tpr(std::span<const double> id_scores, std::span<const double> ood_scores);
// P(id > ood) + 0.5 P(id == ood) over all pairs.
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores);

struct Histogram {
    Vector edges;  // bins + 1
    std::vector<std::size_t> counts;
    std::size_t total() const;
};
// Equal-width bins over [lo, hi]; values at hi land in the last bin, values outside are clamped.
Histogram score_histogram(std::span<const double> scores, std::size_t bins, double lo, double hi);
Histogram score_histogram(std::span<const double> scores, std::size_t bins);

}  // namespace oal
