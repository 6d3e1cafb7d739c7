#include "oal/cli/pipeline.hpp"

#include <fstream>
#include <stdexcept>

#include "oal/core/rng.hpp"

namespace oal {

std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) {
    return RngStream(seed, "pipeline").child(stage).key();
}

ArtifactMeta make_meta(const ExperimentConfig& cfg, std::string kind, bool normalized) {
    return {std::move(kind), cfg.hash(), cfg.seed, normalized};
}

DataBundle make_data(const ExperimentConfig& cfg) {
    DataBundle b;
    b.data = gen_id_mixture(cfg.data, stage_seed(cfg.seed, "data"));
    b.ood_sets = gen_ood_sets(b.data, cfg.ood, cfg.data.spread, stage_seed(cfg.seed, "ood"));
    return b;
}

TeacherSnapshot make_teacher(const ExperimentConfig& cfg, const LabeledDataset& data) {
    return train_teacher(data, cfg.teacher, cfg.train.feature_width, stage_seed(cfg.seed, "teacher"));
}

FeatureSet teacher_train_features(const TeacherSnapshot& teacher, const LabeledDataset& data) {
    const LabeledDataset tr = data.subset(Split::Train);
    FeatureSet fs;
    fs.vectors = teacher.features(tr.inputs);
    for (std::size_t y : tr.labels) fs.labels.push_back(static_cast<long>(y));
    return fs;
}

OutlierBank make_outliers(const ExperimentConfig& cfg, const FeatureSet& teacher_features,
                          std::span<const double> class_norms, std::size_t classes) {
    if (teacher_features.normalized) throw std::invalid_argument("outlier synthesis expects raw teacher features");
    std::vector<std::size_t> labels;
    for (long y : teacher_features.labels) {
        if (y < 0) throw std::invalid_argument("teacher features must be labelled");
        labels.push_back(static_cast<std::size_t>(y));
    }
    auto bank = NormalizedFeatureBank::from_raw(teacher_features.vectors, std::move(labels), classes);
    return synthesize_outliers(bank, class_norms, cfg.synth, RngStream(stage_seed(cfg.seed, "synth"), "synth"));
}

std::vector<LatentBlock> make_latents(const ExperimentConfig& cfg, const OutlierBank& bank, std::size_t classes) {
    return generate_latents(bank.embeddings, bank.embedding_classes, classes, cfg.latent,
                            RngStream(stage_seed(cfg.seed, "latent"), "latent"));
}

void attach_latents(OutlierBank& bank, std::span<const LatentBlock> blocks) {
    bank.latent_features = mean_reduce(blocks);
    bank.latent_classes.clear();
    for (const auto& b : blocks) bank.latent_classes.push_back(b.guidance_class < 0 ? 0 : static_cast<std::size_t>(b.guidance_class));
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, bool with_vanilla) {
    cfg.validate();
    DataBundle bundle = make_data(cfg);
    TeacherSnapshot teacher = make_teacher(cfg, bundle.data);
    OutlierBank bank =
        make_outliers(cfg, teacher_train_features(teacher, bundle.data), teacher.class_norms(), bundle.data.classes);
    attach_latents(bank, make_latents(cfg, bank, bundle.data.classes));
    const std::uint64_t train_seed = stage_seed(cfg.seed, "train");
    TrainResult oal = train(cfg.train, bundle.data, &teacher, &bank, train_seed);
    MetricsReport oal_report = evaluate(oal.model, bundle.data, bundle.ood_sets, cfg.eval);
    oal_report.meta = make_meta(cfg, "metrics");
    PipelineResult r{std::move(bundle), std::move(teacher), std::move(bank), std::move(oal), std::move(oal_report),
                     std::nullopt, std::nullopt};
    if (with_vanilla) {
        r.vanilla = train_vanilla(cfg.train, r.bundle.data, train_seed);
        r.vanilla_report = evaluate(r.vanilla->model, r.bundle.data, r.bundle.ood_sets, cfg.eval);
        r.vanilla_report->meta = make_meta(cfg, "metrics");
    }
    return r;
}

namespace {

FeatureSet split_features(const LabeledDataset& data, Split s, const ArtifactMeta& meta) {
    const LabeledDataset part = data.subset(s);
    FeatureSet fs;
    fs.vectors = part.inputs;
    for (std::size_t y : part.labels) fs.labels.push_back(static_cast<long>(y));
    fs.meta = meta;
    return fs;
}

void check_meta(std::optional<ArtifactMeta>& first, const std::optional<ArtifactMeta>& next, const std::string& what) {
    if (!first) {
        first = next;
        return;
    }
    require_matching(first, next, what);
}

}  // namespace

void save_data(const DataBundle& bundle, const ArtifactPaths& paths, const ArtifactMeta& meta) {
    ArtifactMeta m = meta;
    m.kind = "id-data";
    for (Split s : {Split::Train, Split::Val, Split::Test}) save_features(split_features(bundle.data, s, m), paths.id_split(s));
    m.kind = "ood-data";
    for (const auto& set : bundle.ood_sets) {
        FeatureSet fs;
        fs.vectors = set.inputs;
        fs.labels.assign(set.inputs.rows(), -1);
        fs.meta = m;
        save_features(fs, paths.ood_set(set.name));
    }
}

DataBundle load_data(const ExperimentConfig& cfg, const ArtifactPaths& paths, std::optional<ArtifactMeta>* meta) {
    DataBundle b;
    std::optional<ArtifactMeta> first;
    std::vector<FeatureSet> parts;
    for (Split s : {Split::Train, Split::Val, Split::Test}) {
        const auto path = paths.id_split(s);
        if (!std::filesystem::exists(path)) throw std::runtime_error("missing input " + path.string() + " (run gen-data)");
        parts.push_back(load_features(path));
        check_meta(first, parts.back().meta, path.string());
    }
    std::size_t width = 0;
    for (const auto& p : parts)
        if (p.size()) width = p.width();
    b.data.classes = cfg.data.classes;
    std::vector<Matrix> blocks;
    const Split order[] = {Split::Train, Split::Val, Split::Test};
    for (std::size_t k = 0; k < 3; ++k) {
        if (parts[k].size() == 0) continue;
        blocks.push_back(parts[k].vectors);
        for (long y : parts[k].labels) {
            if (y < 0 || static_cast<std::size_t>(y) >= cfg.data.classes)
                throw std::runtime_error(paths.id_split(order[k]).string() + ": label " + std::to_string(y) + " outside the configured classes");
            b.data.labels.push_back(static_cast<std::size_t>(y));
            b.data.splits.push_back(order[k]);
        }
    }
    std::size_t rows = 0;
    for (const Matrix& m : blocks) rows += m.rows();
    b.data.inputs = Matrix(rows, width);
    std::size_t r = 0;
    for (const Matrix& m : blocks)
        for (std::size_t i = 0; i < m.rows(); ++i, ++r) std::copy(m.row(i).begin(), m.row(i).end(), b.data.inputs.row(r).begin());
    b.data.validate();
    for (OodKind k : cfg.ood.kinds) {
        const auto path = paths.ood_set(to_string(k));
        if (!std::filesystem::exists(path)) throw std::runtime_error("missing input " + path.string() + " (run gen-data)");
        FeatureSet fs = load_features(path);
        check_meta(first, fs.meta, path.string());
        OodTestSet set;
        set.name = to_string(k);
        set.kind = k;
        set.inputs = std::move(fs.vectors);
        b.ood_sets.push_back(std::move(set));
    }
    if (meta) *meta = first;
    return b;
}

void save_outliers(const OutlierBank& bank, const std::filesystem::path& path, const ArtifactMeta& meta) {
    FeatureSet fs;
    fs.vectors = bank.embeddings;
    for (std::size_t c : bank.embedding_classes) fs.labels.push_back(static_cast<long>(c));
    fs.meta = meta;
    save_features(fs, path);
}

OutlierBank load_outliers(const std::filesystem::path& path, std::optional<ArtifactMeta>* meta) {
    FeatureSet fs = load_features(path);
    OutlierBank bank;
    bank.embeddings = std::move(fs.vectors);
    for (long y : fs.labels) bank.embedding_classes.push_back(y < 0 ? 0 : static_cast<std::size_t>(y));
    if (meta) *meta = fs.meta;
    return bank;
}

nlohmann::json train_report_json(const TrainReport& report) {
    nlohmann::json j;
    j["seed"] = report.seed;
    j["train_accuracy"] = report.train_accuracy;
    j["val_accuracy"] = report.val_accuracy;
    nlohmann::json w;
    for (std::size_t c = 0; c < kComponentCount; ++c) w[component_name(c)] = report.weights[c];
    j["weights"] = w;
    j["epochs"] = nlohmann::json::array();
    for (const auto& e : report.epochs) {
        nlohmann::json ej;
        for (std::size_t c = 0; c < kComponentCount; ++c) ej[component_name(c)] = e.components[c];
        ej["total"] = e.total;
        j["epochs"].push_back(ej);
    }
    return j;
}

}  // namespace oal
