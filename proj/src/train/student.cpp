#include "oal/train/student.hpp"

#include <stdexcept>

#include "oal/core/numeric.hpp"

namespace oal {

StudentModel::StudentModel(const std::vector<std::size_t>& encoder_widths, std::size_t classes, const RngStream& rng)
    : encoder_(MlpSpec{encoder_widths, std::vector<Activation>(encoder_widths.size() - 1, Activation::Tanh)},
               rng.child("encoder"), "student.encoder"),
      head_(MlpSpec{{encoder_widths.back(), classes}, {Activation::Identity}}, rng.child("head"), "student.head") {}

StudentModel::StudentModel(Mlp encoder, Mlp head) : encoder_(std::move(encoder)), head_(std::move(head)) {
    if (encoder_.output_width() != head_.input_width()) {
        throw std::invalid_argument("student: encoder output width does not match the head input");
    }
}

StudentModel::Outputs StudentModel::forward(Tape& tape, Var x, bool trainable) {
    Var f = encoder_.forward(tape, x, trainable);
    return {f, head_.forward(tape, f, trainable)};
}

std::vector<Parameter*> StudentModel::parameters() {
    std::vector<Parameter*> out = encoder_.parameters();
    for (Parameter* p : head_.parameters()) out.push_back(p);
    return out;
}

std::vector<const Parameter*> StudentModel::parameters() const {
    std::vector<const Parameter*> out = encoder_.parameters();
    for (const Parameter* p : head_.parameters()) out.push_back(p);
    return out;
}

double accuracy(const StudentModel& model, const Matrix& x, std::span<const std::size_t> labels) {
    if (x.rows() != labels.size()) throw std::invalid_argument("accuracy: row and label counts differ");
    if (labels.empty()) return 0.0;
    const Matrix logits = model.logits(x);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (argmax(logits.row(i)) == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace oal
