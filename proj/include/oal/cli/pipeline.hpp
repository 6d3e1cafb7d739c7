#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oal/cli/config.hpp"
#include "oal/data/feature_io.hpp"
#include "oal/eval/report.hpp"

namespace oal {

// Independent per-stage seeds derived from the experiment seed.
std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage);

ArtifactMeta make_meta(const ExperimentConfig& cfg, std::string kind, bool normalized = false);

struct DataBundle {
    LabeledDataset data;
    std::vector<OodTestSet> ood_sets;
};

DataBundle make_data(const ExperimentConfig& cfg);
TeacherSnapshot make_teacher(const ExperimentConfig& cfg, const LabeledDataset& data);
// Raw teacher features of the train split, labelled by class.
FeatureSet teacher_train_features(const TeacherSnapshot& teacher, const LabeledDataset& data);
// k-NN boundary outliers from raw teacher features; the latent part stays empty.
OutlierBank make_outliers(const ExperimentConfig& cfg, const FeatureSet& teacher_features,
                          std::span<const double> class_norms, std::size_t classes);
std::vector<LatentBlock> make_latents(const ExperimentConfig& cfg, const OutlierBank& bank, std::size_t classes);
void attach_latents(OutlierBank& bank, std::span<const LatentBlock> blocks);

struct PipelineResult {
    DataBundle bundle;
    TeacherSnapshot teacher;
    OutlierBank bank;
    TrainResult oal;
    MetricsReport oal_report;
    std::optional<TrainResult> vanilla;
    std::optional<MetricsReport> vanilla_report;
};

// All stages in memory. The vanilla baseline shares data and training seed.
PipelineResult run_pipeline(const ExperimentConfig& cfg, bool with_vanilla = true);

// On-disk layout of a run directory.
struct ArtifactPaths {
    std::filesystem::path dir;

    std::filesystem::path id_split(Split s) const { return dir / (std::string("id_") + to_string(s) + ".jsonl"); }
    std::filesystem::path ood_set(const std::string& name) const { return dir / ("ood_" + name + ".jsonl"); }
    std::filesystem::path teacher() const { return dir / "teacher.jsonl"; }
    std::filesystem::path teacher_features() const { return dir / "teacher_features.jsonl"; }
    std::filesystem::path outliers() const { return dir / "outliers.jsonl"; }
    std::filesystem::path latents() const { return dir / "latents.jsonl"; }
    std::filesystem::path student(const std::string& tag) const { return dir / ("student_" + tag + ".jsonl"); }
    std::filesystem::path train_report(const std::string& tag) const { return dir / ("train_" + tag + ".json"); }
    std::filesystem::path metrics_csv(const std::string& tag) const { return dir / ("metrics_" + tag + ".csv"); }
    std::filesystem::path metrics_json(const std::string& tag) const { return dir / ("metrics_" + tag + ".json"); }
    std::filesystem::path resolved_config() const { return dir / "config.resolved"; }
};

void save_data(const DataBundle& bundle, const ArtifactPaths& paths, const ArtifactMeta& meta);
// Loads the ID splits and the OOD sets named by cfg.ood.kinds.
DataBundle load_data(const ExperimentConfig& cfg, const ArtifactPaths& paths, std::optional<ArtifactMeta>* meta = nullptr);

void save_outliers(const OutlierBank& bank, const std::filesystem::path& path, const ArtifactMeta& meta);
OutlierBank load_outliers(const std::filesystem::path& path, std::optional<ArtifactMeta>* meta = nullptr);

nlohmann::json train_report_json(const TrainReport& report);

}  // namespace oal
