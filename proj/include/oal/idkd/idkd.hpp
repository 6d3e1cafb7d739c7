#pragma once

#include <span>
#include <string>
#include <string_view>

#include "oal/core/autodiff.hpp"
#include "oal/core/mlp.hpp"

namespace oal {

// StudentFirst is KL(student || teacher); TeacherFirst is the classic KD direction.
enum class KdDirection { StudentFirst, TeacherFirst };

std::string to_string(KdDirection d);
// Accepts "paper" / "student-first" and "reverse" / "teacher-first".
KdDirection parse_kd_direction(std::string_view s);

// phi: teacher features (D_T) -> student feature width (d).
class DomainTransferNet {
public:
    DomainTransferNet() = default;
    DomainTransferNet(std::size_t teacher_width, std::size_t student_width, std::size_t hidden, const RngStream& rng,
                      const std::string& name = "phi");
    explicit DomainTransferNet(Mlp net) : net_(std::move(net)) {}

    Var transfer(Tape& tape, Var teacher_features, bool trainable = true) {
        return net_.forward(tape, teacher_features, trainable);
    }
    Matrix transfer(const Matrix& teacher_features) const { return net_.forward(teacher_features); }
    Vector transfer(std::span<const double> teacher_features) const { return net_.forward(teacher_features); }

    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }
    std::size_t input_width() const { return net_.input_width(); }
    std::size_t output_width() const { return net_.output_width(); }

private:
    Mlp net_;
};

double logit_kd_loss(std::span<const double> student_logits, std::span<const double> teacher_probs,
                     KdDirection dir = KdDirection::StudentFirst);
double feature_kd_loss(std::span<const double> student_features, std::span<const double> teacher_features,
                       const DomainTransferNet& phi, KdDirection dir = KdDirection::StudentFirst);

// Batched graph forms; mean over rows. Teacher quantities enter as constants.
Var logit_kd_loss(Tape& tape, Var student_logits, const Matrix& teacher_probs,
                  KdDirection dir = KdDirection::StudentFirst);
Var feature_kd_loss(Tape& tape, Var student_features, const Matrix& teacher_features, DomainTransferNet& phi,
                    KdDirection dir = KdDirection::StudentFirst, bool trainable = true);

}  // namespace oal
