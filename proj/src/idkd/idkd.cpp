#include "oal/idkd/idkd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oal/core/numeric.hpp"

namespace oal {

std::string to_string(KdDirection d) { return d == KdDirection::StudentFirst ? "paper" : "reverse"; }

KdDirection parse_kd_direction(std::string_view s) {
    if (s == "paper" || s == "student-first") return KdDirection::StudentFirst;
    if (s == "reverse" || s == "teacher-first") return KdDirection::TeacherFirst;
    throw std::invalid_argument("unknown kd direction '" + std::string(s) + "' (expected paper or reverse)");
}

DomainTransferNet::DomainTransferNet(std::size_t teacher_width, std::size_t student_width, std::size_t hidden,
                                     const RngStream& rng, const std::string& name)
    : net_(MlpSpec::tanh_hidden({teacher_width, hidden, hidden, student_width}), rng, name) {}

namespace {

double kl_logs(std::span<const double> logp, std::span<const double> logq) {
    double total = 0.0;
    for (std::size_t i = 0; i < logp.size(); ++i) {
        const double p = std::exp(logp[i]);
        if (p > 0.0) total += p * (logp[i] - logq[i]);
    }
    return std::max(total, 0.0);
}

}  // namespace

double logit_kd_loss(std::span<const double> student_logits, std::span<const double> teacher_probs, KdDirection dir) {
    if (student_logits.size() != teacher_probs.size()) {
        throw std::invalid_argument("logit_kd_loss: " + std::to_string(student_logits.size()) + " logits vs " +
                                    std::to_string(teacher_probs.size()) + " teacher probabilities");
    }
    const Vector ps = softmax(student_logits);
    return dir == KdDirection::StudentFirst ? kl_div(ps, teacher_probs) : kl_div(teacher_probs, ps);
}

double feature_kd_loss(std::span<const double> student_features, std::span<const double> teacher_features,
                       const DomainTransferNet& phi, KdDirection dir) {
    if (student_features.size() != phi.output_width()) {
        throw std::invalid_argument("feature_kd_loss: student width does not match the transfer net output");
    }
    const Vector ls = log_softmax(student_features);
    const Vector lt = log_softmax(phi.transfer(teacher_features));
    return dir == KdDirection::StudentFirst ? kl_logs(ls, lt) : kl_logs(lt, ls);
}

Var logit_kd_loss(Tape& tape, Var student_logits, const Matrix& teacher_probs, KdDirection dir) {
    require_same_shape(student_logits.value(), teacher_probs, "logit_kd_loss");
    Var ls = ad::log_softmax_rows(student_logits);
    Var lt = ad::log_floor(tape.constant(teacher_probs), kProbFloor);
    return dir == KdDirection::StudentFirst ? ad::kl_rows(ls, lt) : ad::kl_rows(lt, ls);
}

Var feature_kd_loss(Tape& tape, Var student_features, const Matrix& teacher_features, DomainTransferNet& phi,
                    KdDirection dir, bool trainable) {
    if (student_features.cols() != phi.output_width() || teacher_features.cols() != phi.input_width() ||
        student_features.rows() != teacher_features.rows()) {
        throw std::invalid_argument("feature_kd_loss: shapes " + shape_string(student_features.value()) + " and " +
                                    shape_string(teacher_features) + " do not fit the transfer net");
    }
    Var ls = ad::log_softmax_rows(student_features);
    Var lt = ad::log_softmax_rows(phi.transfer(tape, tape.constant(teacher_features), trainable));
    return dir == KdDirection::StudentFirst ? ad::kl_rows(ls, lt) : ad::kl_rows(lt, ls);
}

}  // namespace oal
