#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "oal/cli/config.hpp"
#include "oal/cli/pipeline.hpp"
#include "oal/eval/report.hpp"

namespace oal {

// Each stage reads its inputs from cfg.out, writes its outputs there together
// with config.resolved, and throws on missing inputs or provenance mismatch.
// With force=true a mismatch is reported to `log` instead.
void cmd_gen_data(const ExperimentConfig& cfg, std::ostream& log);
void cmd_teacher_train(const ExperimentConfig& cfg, bool force, std::ostream& log);
void cmd_synth_outliers(const ExperimentConfig& cfg, bool force, std::ostream& log);
void cmd_gen_latents(const ExperimentConfig& cfg, bool force, std::ostream& log);

struct TrainOptions {
    bool vanilla = true;   // also train the baseline under the same seed
    bool ablation = false; // module rows (i)-(v), each evaluated with every configured score
    bool force = false;
};
void cmd_train(const ExperimentConfig& cfg, const TrainOptions& opts, std::ostream& log);

// Evaluates student_<tag> and writes metrics_<tag>.{csv,json}.
MetricsReport cmd_eval(const ExperimentConfig& cfg, const std::string& tag, bool force, std::ostream& log);

// gen-data through eval for the OAL model and the vanilla baseline.
void cmd_pipeline(const ExperimentConfig& cfg, std::ostream& log);

struct AggregateRow {
    std::string ood_set;
    std::string score;
    double fpr95_mean = 0.0, fpr95_std = 0.0;
    double auroc_mean = 0.0, auroc_std = 0.0;
};

struct Aggregate {
    std::size_t reports = 0;
    double id_accuracy_mean = 0.0, id_accuracy_std = 0.0;
    std::vector<AggregateRow> rows;

    // Columns: ood_set,score,n,fpr95_mean,fpr95_std,auroc_mean,auroc_std
    std::string to_csv() const;
    nlohmann::json to_json() const;
};

// Mean and sample standard deviation (n - 1; zero for a single report) per
// (OOD set, score). Every report must carry the rows of the first.
Aggregate aggregate_reports(const std::vector<MetricsReport>& reports);

// Writes summary.{csv,json} and hist_<score>_<set>_<k>.csv for each input
// into out_dir.
Aggregate cmd_report(const std::vector<std::string>& inputs, const std::filesystem::path& out_dir, std::ostream& log);

// Returns true when every oracle passes.
bool cmd_verify_oracles(std::uint64_t seed, bool inject_fault, std::ostream& log);

}  // namespace oal
