#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oal/cli/commands.hpp"
#include "oal/cli/pipeline.hpp"
#include "oal/verify/oracles.hpp"

using namespace oal;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool passed = false;
    std::string detail;
};

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// budget_seconds <= 0 means no runtime limit.
Outcome from_oracle(const verify::OracleResult& r, double budget_seconds = 0.0) {
    const bool in_time = budget_seconds <= 0.0 || r.seconds < budget_seconds;
    Outcome o{r.passed && in_time, r.detail};
    char buf[64];
    if (budget_seconds > 0.0)
        std::snprintf(buf, sizeof buf, "; %.2fs (budget %.0fs)", r.seconds, budget_seconds);
    else
        std::snprintf(buf, sizeof buf, "; %.2fs", r.seconds);
    o.detail += buf;
    return o;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool same_parameters(const StudentModel& a, const StudentModel& b) {
    auto pa = a.parameters(), pb = b.parameters();
    if (pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i)
        if (!(pa[i]->value == pb[i]->value)) return false;
    return true;
}

Outcome directional(std::size_t seeds) {
    const auto t0 = Clock::now();
    const char* near = "shifted-cluster";
    const char* kinds[] = {"msp", "ebo", "gen", "knn"};
    double oal_auroc[4] = {}, van_auroc[4] = {}, oal_acc = 0.0, van_acc = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) {
        ExperimentConfig cfg;
        cfg.seed = s;
        const PipelineResult r = run_pipeline(cfg, true);
        oal_acc += r.oal_report.id_accuracy / seeds;
        van_acc += r.vanilla_report->id_accuracy / seeds;
        for (std::size_t k = 0; k < 4; ++k) {
            oal_auroc[k] += r.oal_report.find(near, kinds[k]).auroc / seeds;
            van_auroc[k] += r.vanilla_report->find(near, kinds[k]).auroc / seeds;
        }
    }
    const double secs = elapsed(t0);
    const bool ebo = oal_auroc[1] > van_auroc[1], gen = oal_auroc[2] > van_auroc[2];
    const bool acc = oal_acc >= van_acc - 0.005;
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "near-OOD AUROC oal/vanilla: ebo %.4f/%.4f%s gen %.4f/%.4f%s (msp %.4f/%.4f, knn %.4f/%.4f); "
                  "ID acc %.4f/%.4f%s; %.0fs (budget 900s)",
                  oal_auroc[1], van_auroc[1], ebo ? "" : " [not higher]", oal_auroc[2], van_auroc[2],
                  gen ? "" : " [not higher]", oal_auroc[0], van_auroc[0], oal_auroc[3], van_auroc[3], oal_acc, van_acc,
                  acc ? "" : " [degraded]", secs);
    return {ebo && gen && acc && secs < 900.0, buf};
}

Outcome zero_weight_identity() {
    ExperimentConfig cfg;
    cfg.seed = 11;
    const DataBundle b = make_data(cfg);
    const TeacherSnapshot teacher = make_teacher(cfg, b.data);
    OutlierBank bank =
        make_outliers(cfg, teacher_train_features(teacher, b.data), teacher.class_norms(), b.data.classes);
    attach_latents(bank, make_latents(cfg, bank, b.data.classes));
    TrainConfig zero = cfg.train;
    zero.weights = {0.0, 0.0, 0.0, 0.0};
    const std::uint64_t seed = stage_seed(cfg.seed, "train");
    const TrainResult oal = train(zero, b.data, &teacher, &bank, seed);
    const TrainResult van = train_vanilla(cfg.train, b.data, seed);
    bool losses = oal.report.epochs.size() == van.report.epochs.size();
    for (std::size_t e = 0; losses && e < oal.report.epochs.size(); ++e)
        losses = oal.report.epochs[e].total == van.report.epochs[e].total;
    const bool params = same_parameters(oal.model, van.model);
    return {params && losses, std::string("parameters ") + (params ? "bitwise equal" : "DIFFER") + ", epoch losses " +
                                  (losses ? "bitwise equal" : "DIFFER") + " over " +
                                  std::to_string(oal.report.epochs.size()) + " epochs"};
}

Outcome determinism() {
    const auto base = std::filesystem::temp_directory_path() / "oal_acceptance_determinism";
    std::filesystem::remove_all(base);
    std::ostringstream log;
    for (const char* run : {"a", "b"}) {
        ExperimentConfig cfg;
        cfg.seed = 5;
        cfg.out = (base / run).string();
        cmd_pipeline(cfg, log);
    }
    std::size_t compared = 0, differing = 0;
    for (const char* f : {"metrics_oal.json", "metrics_oal.csv", "metrics_vanilla.json", "metrics_vanilla.csv"}) {
        ++compared;
        if (slurp(base / "a" / f) != slurp(base / "b" / f) || slurp(base / "a" / f).empty()) ++differing;
    }
    std::filesystem::remove_all(base);
    return {differing == 0,
            std::to_string(compared) + " report files compared, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main() {
    const std::uint64_t seed = 20240601;
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "CLUB identity on discrete joints",
         [&] { return from_oracle(verify::check_club_identity(seed, 1000, 100), 10.0); }},
        {2, "loss gradients vs finite differences",
         [&] { return from_oracle(verify::check_gradients(seed, 100), 60.0); }},
        {3, "k-NN samplers vs brute force", [&] { return from_oracle(verify::check_samplers(seed, 200, 500, 16)); }},
        {4, "metric oracles", [&] { return from_oracle(verify::check_metrics(seed, 500)); }},
        {5, "Gaussian MI upper bound", [&] { return from_oracle(verify::check_gaussian_mi(seed, 10000, 0.8)); }},
        {6, "directional reproduction over 5 seeds", [] { return directional(5); }},
        {7, "zero weights reproduce vanilla bitwise", [] { return zero_weight_identity(); }},
        {8, "pipeline reruns give identical reports", [] { return determinism(); }},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.passed) ++failures;
        std::printf("criterion %d %-42s %s  %s\n", c.id, c.name, o.passed ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
