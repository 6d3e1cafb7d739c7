#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "oal/data/artifact.hpp"
#include "oal/data/dataset.hpp"
#include "oal/eval/scoring.hpp"

namespace oal {

struct SetMetrics {
    std::string ood_set;
    std::string score;
    double fpr95 = 0.0;
    double auroc = 0.0;
};

struct ScoreHistograms {
    std::string score;
    Histogram id;
    std::vector<std::pair<std::string, Histogram>> ood;
};

struct MetricsReport {
    double id_accuracy = 0.0;
    std::vector<SetMetrics> rows;
    std::vector<ScoreHistograms> histograms;
    std::optional<ArtifactMeta> meta;

    const SetMetrics& find(const std::string& ood_set, const std::string& score) const;

    // Columns: ood_set,score,fpr95,auroc
    std::string to_csv() const;
    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
};

struct EvalConfig {
    std::vector<ScoreSpec> scores;
    std::size_t histogram_bins = 50;
};

// Normalized student features of the train split: the KNN score bank.
Matrix knn_bank(const StudentModel& model, const LabeledDataset& data);

// ID scores come from the test split; one row per (OOD set, score).
MetricsReport evaluate(const StudentModel& model, const LabeledDataset& data, const std::vector<OodTestSet>& ood_sets,
                       const EvalConfig& cfg);

void save_report(const MetricsReport& report, const std::string& csv_path, const std::string& json_path);
MetricsReport load_report_json(const std::string& path);

}  // namespace oal
