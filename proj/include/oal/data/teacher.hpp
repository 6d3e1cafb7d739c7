#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "oal/core/mlp.hpp"
#include "oal/data/dataset.hpp"

namespace oal {

struct TeacherConfig {
    std::size_t feature_width = 64;  // D_T; must exceed the student feature width
    std::size_t hidden = 64;
    std::size_t epochs = 100;
    std::size_t batch = 32;
    double lr = 0.05;
    std::size_t text_width = 64;     // width of the per-class stand-in text embedding
};

// Frozen teacher classifier.
//
// body: x -> f_T (penultimate features, width D_T); head: f_T -> logits.
// The per-class norm table stands in for the Frobenius norm of a class-name
// text embedding: the norm of a seeded random vector with N(0, 1/width)
// entries, one per class.
class TeacherSnapshot {
public:
    TeacherSnapshot(Mlp body, Mlp head, Vector class_norms, double val_accuracy);

    Matrix features(const Matrix& x) const;
    Matrix logits(const Matrix& x) const;
    Matrix probabilities(const Matrix& x) const;

    std::size_t feature_width() const { return body_.output_width(); }
    std::size_t input_width() const { return body_.input_width(); }
    std::size_t classes() const { return head_.output_width(); }
    std::span<const double> class_norms() const { return class_norms_; }
    double val_accuracy() const { return val_accuracy_; }

    const Mlp& body() const { return body_; }
    const Mlp& head() const { return head_; }

private:
    Mlp body_;
    Mlp head_;
    Vector class_norms_;
    double val_accuracy_;
};

// Seeded stand-in text-embedding norms, one per class.
Vector text_embedding_norms(std::size_t classes, std::size_t width, std::uint64_t seed);

// Trains on the train split with minibatch SGD, records accuracy on the val
// split. `student_feature_width` enforces D_T > d. Throws NumericError when
// training diverges.
TeacherSnapshot train_teacher(const LabeledDataset& data, const TeacherConfig& cfg, std::size_t student_feature_width,
                              std::uint64_t seed);

}  // namespace oal
