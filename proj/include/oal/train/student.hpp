#pragma once

#include <string>
#include <vector>

#include "oal/core/autodiff.hpp"
#include "oal/core/mlp.hpp"
#include "oal/core/rng.hpp"

namespace oal {

// Encoder x -> f_in (tanh layers) followed by a linear head f_in -> logits.
class StudentModel {
public:
    StudentModel() = default;
    // encoder_widths = {input, hidden..., feature_width}
    StudentModel(const std::vector<std::size_t>& encoder_widths, std::size_t classes, const RngStream& rng);
    StudentModel(Mlp encoder, Mlp head);

    struct Outputs {
        Var features;
        Var logits;
    };
    Outputs forward(Tape& tape, Var x, bool trainable = true);

    Matrix features(const Matrix& x) const { return encoder_.forward(x); }
    Matrix logits(const Matrix& x) const { return head_.forward(encoder_.forward(x)); }
    Matrix logits_from_features(const Matrix& f) const { return head_.forward(f); }

    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;

    Mlp& encoder() { return encoder_; }
    Mlp& head() { return head_; }
    const Mlp& encoder() const { return encoder_; }
    const Mlp& head() const { return head_; }
    std::size_t input_width() const { return encoder_.input_width(); }
    std::size_t feature_width() const { return encoder_.output_width(); }
    std::size_t classes() const { return head_.output_width(); }

private:
    Mlp encoder_;
    Mlp head_;
};

double accuracy(const StudentModel& model, const Matrix& x, std::span<const std::size_t> labels);

}  // namespace oal
