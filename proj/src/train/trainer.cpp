#include "oal/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "oal/synth/latent.hpp"

namespace oal {

void TrainConfig::validate() const {
    for (double w : {weights.alpha1, weights.alpha2, weights.beta, weights.gamma})
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("loss weights must be finite and >= 0");
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be finite and >= 0");
    if (!(q_lr >= 0.0) || !std::isfinite(q_lr)) throw std::invalid_argument("variational learning rate must be >= 0");
    if (epochs == 0) throw std::invalid_argument("epochs must be >= 1");
    if (batch < 2) throw std::invalid_argument("batch must be >= 2");
    if (feature_width == 0 || phi_hidden == 0 || align_hidden == 0 || q_hidden == 0)
        throw std::invalid_argument("network widths must be positive");
    for (std::size_t h : encoder_hidden)
        if (h == 0) throw std::invalid_argument("encoder hidden widths must be positive");
    if (q_steps == 0) throw std::invalid_argument("q_steps must be >= 1");
}

TrainConfig TrainConfig::vanilla(TrainConfig base) {
    base.switches = {false, false, false};
    return base;
}

std::string to_string(Pairing p) { return p == Pairing::Independent ? "independent" : "class-matched"; }

Pairing parse_pairing(std::string_view s) {
    if (s == "independent") return Pairing::Independent;
    if (s == "class-matched") return Pairing::ClassMatched;
    throw std::invalid_argument("unknown pairing '" + std::string(s) + "' (expected independent or class-matched)");
}

const char* component_name(std::size_t c) {
    static const char* names[] = {"ce", "logit_kd", "feature_kd", "micl1", "micl2"};
    return c < kComponentCount ? names[c] : "?";
}

std::array<double, kComponentCount> effective_weights(const TrainConfig& cfg) {
    const auto& w = cfg.weights;
    const auto& s = cfg.switches;
    return {1.0, s.idkd ? w.alpha1 : 0.0, s.idkd ? w.alpha2 : 0.0, s.micl1 ? w.beta : 0.0, s.micl2 ? w.gamma : 0.0};
}

std::vector<AblationSetting> ablation_settings() {
    return {{"(i)", {false, false, false}},
            {"(ii)", {true, false, false}},
            {"(iii)", {true, true, false}},
            {"(iv)", {false, true, true}},
            {"(v)", {true, true, true}}};
}

OalNets OalNets::create(const TrainConfig& cfg, std::size_t teacher_width, std::size_t latent_width,
                        const RngStream& rng) {
    const std::size_t d = cfg.feature_width;
    return {DomainTransferNet(teacher_width, d, cfg.phi_hidden, rng.child("phi"), "phi"),
            AlignmentNet(teacher_width, d, cfg.align_hidden, rng.child("align"), "align"),
            AlignmentNet(latent_width, d, cfg.align_hidden, rng.child("align_latent"), "align_latent"),
            VariationalConditional(d, d, cfg.q_hidden, rng.child("q1"), "q1"),
            VariationalConditional(d, d, cfg.q_hidden, rng.child("q2"), "q2")};
}

std::vector<Parameter*> OalNets::trainable() {
    std::vector<Parameter*> out = phi.net().parameters();
    for (Parameter* p : align.net().parameters()) out.push_back(p);
    for (Parameter* p : align_latent.net().parameters()) out.push_back(p);
    return out;
}

LossTerms total_loss(Tape& tape, const TrainBatch& batch, StudentModel& model, OalNets& nets, const TrainConfig& cfg) {
    LossTerms terms;
    terms.weights = effective_weights(cfg);
    auto out = model.forward(tape, tape.constant(batch.x));

    auto build = [&](std::size_t c, auto&& make) -> Var {
        try {
            Var v = make();
            terms.values[c] = v.scalar();
            return v;
        } catch (const NumericError& e) {
            throw NumericError(std::string("non-finite ") + component_name(c) + " term: " + e.what());
        }
    };

    terms.total = build(kCe, [&] { return ad::cross_entropy(out.logits, batch.labels); });
    auto add = [&](std::size_t c, auto&& make) {
        if (terms.weights[c] == 0.0) return;
        Var v = build(c, make);
        terms.total = ad::add(terms.total, ad::scale(v, terms.weights[c]));
    };
    add(kLogitKd, [&] { return logit_kd_loss(tape, out.logits, batch.teacher_probs, cfg.kd_direction); });
    add(kFeatureKd,
        [&] { return feature_kd_loss(tape, out.features, batch.teacher_features, nets.phi, cfg.kd_direction); });
    add(kMicl1, [&] {
        Var u = nets.align.align(tape, tape.constant(batch.outlier_embeddings));
        return micl_loss(tape, out.features, u, nets.q1);
    });
    add(kMicl2, [&] {
        Var u = nets.align_latent.align(tape, tape.constant(batch.outlier_latents));
        return micl_loss(tape, out.features, u, nets.q2);
    });
    return terms;
}

namespace {

std::string describe(const std::array<double, kComponentCount>& v) {
    std::ostringstream os;
    for (std::size_t c = 0; c < kComponentCount; ++c) os << (c ? ", " : "") << component_name(c) << '=' << v[c];
    return os.str();
}

// Rows of `bank` grouped by class label.
std::vector<std::vector<std::size_t>> rows_by_class(std::span<const std::size_t> classes, std::size_t count) {
    std::vector<std::vector<std::size_t>> out(count);
    for (std::size_t i = 0; i < classes.size(); ++i)
        if (classes[i] < count) out[classes[i]].push_back(i);
    return out;
}

Matrix draw_rows(const Matrix& bank, const std::vector<std::vector<std::size_t>>& by_class,
                 std::span<const std::size_t> labels, Pairing pairing, RngStream& rng) {
    std::vector<std::size_t> idx(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (pairing == Pairing::ClassMatched && !by_class[labels[i]].empty()) {
            const auto& rows = by_class[labels[i]];
            idx[i] = rows[rng.index(rows.size())];
        } else {
            idx[i] = rng.index(bank.rows());
        }
    }
    return gather_rows(bank, idx);
}

// Batch boundaries over n shuffled rows; a trailing singleton joins the previous batch.
std::vector<std::size_t> batch_starts(std::size_t n, std::size_t batch) {
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s < n; s += batch) starts.push_back(s);
    if (starts.size() > 1 && n - starts.back() == 1) starts.pop_back();
    starts.push_back(n);
    return starts;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const LabeledDataset& data, const TeacherSnapshot* teacher,
                  const OutlierBank* bank, std::uint64_t seed) {
    cfg.validate();
    data.validate();
    const auto start_time = std::chrono::steady_clock::now();
    const auto w = effective_weights(cfg);
    const bool idkd = w[kLogitKd] > 0.0 || w[kFeatureKd] > 0.0;
    const bool micl1 = w[kMicl1] > 0.0, micl2 = w[kMicl2] > 0.0;
    if (idkd && teacher == nullptr) throw std::invalid_argument("knowledge distillation is active but no teacher was given");
    if (micl1 && (bank == nullptr || bank->embeddings.rows() == 0))
        throw std::invalid_argument("micl1 is active but the outlier embedding bank is empty");
    if (micl2 && (bank == nullptr || bank->latent_features.rows() == 0))
        throw std::invalid_argument("micl2 is active but the latent outlier bank is empty");
    if (teacher != nullptr && (teacher->input_width() != data.dim() || teacher->classes() != data.classes))
        throw std::invalid_argument("teacher does not match the dataset shape");

    const LabeledDataset tr = data.subset(Split::Train);
    const LabeledDataset val = data.subset(Split::Val);
    if (tr.size() < 2) throw std::invalid_argument("training needs at least 2 train rows");

    const RngStream root(seed, "train");
    std::vector<std::size_t> widths{data.dim()};
    widths.insert(widths.end(), cfg.encoder_hidden.begin(), cfg.encoder_hidden.end());
    widths.push_back(cfg.feature_width);
    TrainResult result{StudentModel(widths, data.classes, root.child("student")), {}, {}};
    const std::size_t teacher_width = teacher ? teacher->feature_width() : TeacherConfig{}.feature_width;
    const std::size_t latent_width =
        bank && bank->latent_features.cols() > 0 ? bank->latent_features.cols() : LatentShape{}.width;
    result.nets = OalNets::create(cfg, teacher_width, latent_width, root.child("nets"));
    if (micl1 && bank->embeddings.cols() != teacher_width)
        throw std::invalid_argument("outlier embeddings do not live in the teacher feature space");

    StudentModel& model = result.model;
    OalNets& nets = result.nets;
    RngStream order = root.child("order");
    RngStream outliers = root.child("outliers");

    Matrix t_features, t_probs;
    if (idkd) {
        t_features = teacher->features(tr.inputs);
        t_probs = teacher->probabilities(tr.inputs);
    }

    std::vector<std::vector<std::size_t>> emb_by_class, lat_by_class;
    if (bank != nullptr) {
        emb_by_class = rows_by_class(bank->embedding_classes, data.classes);
        lat_by_class = rows_by_class(bank->latent_classes, data.classes);
    }

    std::vector<Parameter*> student_params = model.parameters();
    std::vector<Parameter*> net_params = nets.trainable();
    std::vector<std::size_t> perm(tr.size());
    std::iota(perm.begin(), perm.end(), 0);
    const auto starts = batch_starts(tr.size(), cfg.batch);

    TrainReport& report = result.report;
    report.weights = w;
    report.seed = seed;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[order.index(i + 1)]);
        EpochLosses acc;
        for (std::size_t b = 0; b + 1 < starts.size(); ++b) {
            const std::vector<std::size_t> idx(perm.begin() + starts[b], perm.begin() + starts[b + 1]);
            TrainBatch batch;
            batch.x = gather_rows(tr.inputs, idx);
            for (std::size_t i : idx) batch.labels.push_back(tr.labels[i]);
            if (idkd) {
                batch.teacher_features = gather_rows(t_features, idx);
                batch.teacher_probs = gather_rows(t_probs, idx);
            }
            if (micl1)
                batch.outlier_embeddings = draw_rows(bank->embeddings, emb_by_class, batch.labels, cfg.pairing, outliers);
            if (micl2)
                batch.outlier_latents = draw_rows(bank->latent_features, lat_by_class, batch.labels, cfg.pairing, outliers);

            if (micl1 || micl2) {
                const Matrix f = model.features(batch.x);
                if (micl1) fit_variational(nets.q1, f, nets.align.align(batch.outlier_embeddings), cfg.q_steps, cfg.q_lr);
                if (micl2)
                    fit_variational(nets.q2, f, nets.align_latent.align(batch.outlier_latents), cfg.q_steps, cfg.q_lr);
            }

            zero_grads(student_params);
            zero_grads(net_params);
            Tape tape;
            LossTerms terms = total_loss(tape, batch, model, nets, cfg);
            try {
                tape.backward(terms.total);
            } catch (const NumericError& e) {
                throw NumericError(std::string("non-finite gradient at epoch ") + std::to_string(epoch) + " (" +
                                   describe(terms.values) + "): " + e.what());
            }
            sgd_step(student_params, cfg.lr);
            sgd_step(net_params, cfg.lr);
            for (std::size_t c = 0; c < kComponentCount; ++c) acc.components[c] += terms.values[c];
            acc.total += terms.total.scalar();
        }
        const double steps = static_cast<double>(starts.size() - 1);
        for (double& v : acc.components) v /= steps;
        acc.total /= steps;
        report.epochs.push_back(acc);
    }
    report.train_accuracy = accuracy(model, tr.inputs, tr.labels);
    report.val_accuracy = val.size() ? accuracy(model, val.inputs, val.labels) : 0.0;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return result;
}

TrainResult train_vanilla(const TrainConfig& cfg, const LabeledDataset& data, std::uint64_t seed) {
    return train(TrainConfig::vanilla(cfg), data, nullptr, nullptr, seed);
}

}  // namespace oal
