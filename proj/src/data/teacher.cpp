#include "oal/data/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "oal/core/numeric.hpp"
#include "oal/core/rng.hpp"

namespace oal {

TeacherSnapshot::TeacherSnapshot(Mlp body, Mlp head, Vector class_norms, double val_accuracy)
    : body_(std::move(body)), head_(std::move(head)), class_norms_(std::move(class_norms)), val_accuracy_(val_accuracy) {
    if (body_.output_width() != head_.input_width()) throw std::invalid_argument("teacher body/head width mismatch");
    if (class_norms_.size() != head_.output_width()) throw std::invalid_argument("teacher class-norm table size mismatch");
    for (double n : class_norms_)
        if (!(n > 0.0)) throw std::invalid_argument("teacher class norms must be positive");
}

Matrix TeacherSnapshot::features(const Matrix& x) const { return body_.forward(x); }

Matrix TeacherSnapshot::logits(const Matrix& x) const { return head_.forward(body_.forward(x)); }

Matrix TeacherSnapshot::probabilities(const Matrix& x) const {
    Matrix z = logits(x);
    for (std::size_t i = 0; i < z.rows(); ++i) {
        auto p = softmax(z.row(i));
        std::copy(p.begin(), p.end(), z.row(i).data());
    }
    return z;
}

Vector text_embedding_norms(std::size_t classes, std::size_t width, std::uint64_t seed) {
    RngStream root(seed, "text-embedding");
    Vector norms(classes);
    const double sd = 1.0 / std::sqrt(static_cast<double>(width));
    for (std::size_t c = 0; c < classes; ++c) {
        RngStream rng = root.child("class", c);
        Vector e(width);
        for (double& v : e) v = sd * rng.normal();
        norms[c] = l2_norm(e);
    }
    return norms;
}

TeacherSnapshot train_teacher(const LabeledDataset& data, const TeacherConfig& cfg, std::size_t student_feature_width,
                              std::uint64_t seed) {
    if (cfg.feature_width <= student_feature_width) {
        throw std::invalid_argument("teacher feature width " + std::to_string(cfg.feature_width) +
                                    " must exceed student feature width " + std::to_string(student_feature_width));
    }
    if (cfg.batch == 0) throw std::invalid_argument("teacher batch must be positive");
    const LabeledDataset train = data.subset(Split::Train);
    const LabeledDataset val = data.subset(Split::Val);
    if (train.size() == 0) throw std::invalid_argument("teacher training needs a non-empty train split");

    RngStream root(seed, "teacher");
    Mlp body(MlpSpec::tanh_hidden({data.dim(), cfg.hidden, cfg.feature_width}, Activation::Tanh), root.child("body"),
             "teacher.body");
    Mlp head(MlpSpec::tanh_hidden({cfg.feature_width, data.classes}), root.child("head"), "teacher.head");
    RngStream order_rng = root.child("order");

    std::vector<Parameter*> params = body.parameters();
    for (Parameter* p : head.parameters()) params.push_back(p);

    std::vector<std::size_t> order(train.size());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.index(i)]);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t end = std::min(order.size(), start + cfg.batch);
            std::span<const std::size_t> idx(order.data() + start, end - start);
            std::vector<std::size_t> labels;
            for (std::size_t i : idx) labels.push_back(train.labels[i]);
            zero_grads(params);
            Tape tape;
            Var x = tape.input(gather_rows(train.inputs, idx));
            Var loss = ad::cross_entropy(head.forward(tape, body.forward(tape, x)), labels);
            try {
                tape.backward(loss);
            } catch (const NumericError& e) {
                throw NumericError(std::string("teacher training diverged: ") + e.what());
            }
            sgd_step(params, cfg.lr);
        }
    }

    double acc = 0.0;
    const LabeledDataset& eval = val.size() > 0 ? val : train;
    Matrix logits = head.forward(body.forward(eval.inputs));
    for (std::size_t i = 0; i < eval.size(); ++i) acc += argmax(logits.row(i)) == eval.labels[i] ? 1.0 : 0.0;
    acc /= static_cast<double>(eval.size());

    return TeacherSnapshot(std::move(body), std::move(head),
                           text_embedding_norms(data.classes, cfg.text_width, seed), acc);
}

}  // namespace oal
