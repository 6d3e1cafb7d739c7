#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oal/cli/commands.hpp"
#include "oal/train/checkpoint.hpp"

using namespace oal;
using doctest::Approx;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("oal_test_cli_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Small enough that every stage runs in well under a second.
ExperimentConfig tiny(const std::filesystem::path& out, std::uint64_t seed = 1) {
    ExperimentConfig cfg = parse_config(R"(
data.classes = 3
data.dim = 4
data.train_per_class = 30
data.val_per_class = 10
data.test_per_class = 20
ood.samples_per_set = 40
teacher.feature_width = 12
teacher.hidden = 12
teacher.epochs = 5
teacher.text_width = 8
synth.k = 3
synth.top = 4
synth.candidates = 20
synth.keep = 6
latent.channels = 2
latent.height = 2
latent.width = 4
latent.count = 20
student.feature_width = 6
trainer.epochs = 2
score.knn_k = 3
score.histogram_bins = 8
)");
    cfg.seed = seed;
    cfg.out = out.string();
    return cfg;
}

MetricsReport report_with(double acc, std::vector<std::pair<double, double>> fpr_auroc) {
    MetricsReport r;
    r.id_accuracy = acc;
    const char* sets[] = {"near", "far"};
    for (std::size_t i = 0; i < fpr_auroc.size(); ++i)
        r.rows.push_back({sets[i], "ebo", fpr_auroc[i].first, fpr_auroc[i].second});
    return r;
}

}  // namespace

TEST_CASE("config: unknown, repeated and malformed keys name the line") {
    CHECK_THROWS_WITH_AS(parse_config("seed = 1\ntrainer.alpah1 = 2\n", "exp.cfg"),
                         doctest::Contains("exp.cfg:2"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config("seed = 1\n# note\nseed = 2\n", "exp.cfg"), doctest::Contains("exp.cfg:3"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config("trainer.lr = fast\n", "exp.cfg"), doctest::Contains("exp.cfg:1"),
                         std::invalid_argument);
    CHECK_THROWS_AS(parse_config("just a line\n"), std::invalid_argument);
    CHECK_THROWS_AS(load_config("/nonexistent/oal.cfg"), std::runtime_error);
}

TEST_CASE("config: defaults match the documented values") {
    const ExperimentConfig cfg;
    CHECK(cfg.get("trainer.alpha1") == "4");
    CHECK(cfg.get("trainer.alpha2") == "8");
    CHECK(cfg.get("trainer.beta") == "0.1");
    CHECK(cfg.get("trainer.gamma") == "0.2");
    CHECK(cfg.get("data.classes") == "5");
    CHECK(cfg.get("data.dim") == "8");
    CHECK(cfg.get("idkd.direction") == "paper");
    CHECK(cfg.get("score.kinds") == "msp,ebo,gen,knn");
}

TEST_CASE("config: resolved text parses back to the same config") {
    ExperimentConfig cfg = tiny("somewhere", 9);
    cfg.set("idkd.direction", "reverse");
    cfg.set("score.kinds", "ebo,gen");
    cfg.set("student.encoder_hidden", "8,6");
    const ExperimentConfig back = parse_config(cfg.resolved());
    CHECK(back.resolved() == cfg.resolved());
    CHECK(back.hash() == cfg.hash());
    CHECK(back.eval.scores.size() == 2);
    CHECK(back.train.encoder_hidden == std::vector<std::size_t>{8, 6});
}

TEST_CASE("config: hash ignores seed, out and scoring keys only") {
    ExperimentConfig a;
    ExperimentConfig b = a;
    b.seed = 42;
    b.out = "elsewhere";
    b.set("score.kinds", "knn");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    b.set("trainer.beta", "0.3");
    CHECK(a.hash() != b.hash());
    ExperimentConfig c;
    c.set("data.separation", "5");
    CHECK(a.hash() != c.hash());
}

TEST_CASE("config: every key can be read and written back") {
    ExperimentConfig cfg;
    for (const auto& key : ExperimentConfig::keys()) {
        ExperimentConfig copy = cfg;
        copy.set(key, cfg.get(key));
        CHECK_MESSAGE(copy.resolved() == cfg.resolved(), key);
    }
    CHECK_THROWS_AS(cfg.set("no.such.key", "1"), std::invalid_argument);
}

TEST_CASE("report: mean and sample std match hand computation") {
    const std::vector<MetricsReport> reports{report_with(0.90, {{0.50, 0.80}, {0.20, 0.95}}),
                                             report_with(0.92, {{0.40, 0.82}, {0.30, 0.90}}),
                                             report_with(0.94, {{0.60, 0.84}, {0.10, 0.85}})};
    const Aggregate a = aggregate_reports(reports);
    CHECK(a.reports == 3);
    CHECK(a.id_accuracy_mean == Approx(0.92).epsilon(1e-14));
    CHECK(a.id_accuracy_std == Approx(0.02).epsilon(1e-12));
    REQUIRE(a.rows.size() == 2);
    CHECK(a.rows[0].ood_set == "near");
    CHECK(a.rows[0].fpr95_mean == Approx(0.5).epsilon(1e-14));
    CHECK(a.rows[0].fpr95_std == Approx(0.1).epsilon(1e-12));
    CHECK(a.rows[0].auroc_mean == Approx(0.82).epsilon(1e-14));
    CHECK(a.rows[0].auroc_std == Approx(0.02).epsilon(1e-12));
    CHECK(a.rows[1].fpr95_mean == Approx(0.2).epsilon(1e-14));
    CHECK(a.rows[1].auroc_std == Approx(0.05).epsilon(1e-12));
    CHECK(a.to_csv().rfind("ood_set,score,n,fpr95_mean,fpr95_std,auroc_mean,auroc_std\nnear,ebo,3,", 0) == 0);
}

TEST_CASE("report: a single seed has zero std and missing rows or files are errors") {
    const Aggregate one = aggregate_reports({report_with(0.9, {{0.3, 0.7}})});
    CHECK(one.id_accuracy_std == 0.0);
    CHECK(one.rows[0].auroc_std == 0.0);
    CHECK(one.rows[0].auroc_mean == 0.7);
    CHECK_THROWS(aggregate_reports({report_with(0.9, {{0.3, 0.7}, {0.1, 0.9}}), report_with(0.9, {{0.3, 0.7}})}));
    CHECK_THROWS_AS(aggregate_reports({}), std::invalid_argument);
    std::ostringstream log;
    CHECK_THROWS_WITH_AS(cmd_report({"/nonexistent/metrics_oal.json"}, scratch("report_missing"), log),
                         doctest::Contains("missing input"), std::runtime_error);
}

TEST_CASE("stages: missing upstream artifacts are reported") {
    const auto dir = scratch("missing");
    std::ostringstream log;
    CHECK_THROWS_WITH_AS(cmd_teacher_train(tiny(dir), false, log), doctest::Contains("gen-data"), std::runtime_error);
    cmd_gen_data(tiny(dir), log);
    CHECK_THROWS_WITH_AS(cmd_synth_outliers(tiny(dir), false, log), doctest::Contains("teacher-train"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(cmd_eval(tiny(dir), "oal", false, log), doctest::Contains("train"), std::runtime_error);
    CHECK(std::filesystem::exists(dir / "config.resolved"));
}

TEST_CASE("stages: full pipeline writes every artifact and reruns byte-identically") {
    const auto a = scratch("pipe_a"), b = scratch("pipe_b");
    std::ostringstream log;
    cmd_pipeline(tiny(a), log);
    cmd_pipeline(tiny(b), log);
    for (const char* f : {"id_train.jsonl", "teacher.jsonl", "outliers.jsonl", "latents.jsonl", "student_oal.jsonl",
                          "student_vanilla.jsonl", "metrics_oal.csv", "metrics_oal.json", "metrics_vanilla.json",
                          "train_oal.json", "config.resolved"}) {
        CAPTURE(f);
        REQUIRE(std::filesystem::exists(a / f));
        if (std::string(f) != "config.resolved") CHECK(slurp(a / f) == slurp(b / f));
    }
    const MetricsReport r = load_report_json((a / "metrics_oal.json").string());
    CHECK(r.rows.size() == 3 * 4);
    REQUIRE(r.meta.has_value());
    CHECK(r.meta->config_hash == tiny(a).hash());
    CHECK(parse_config(slurp(a / "config.resolved")).resolved() == tiny(a).resolved());
}

TEST_CASE("stages: eval refuses artifacts from another seed unless forced") {
    const auto dir = scratch("force");
    std::ostringstream log;
    cmd_pipeline(tiny(dir, 1), log);
    CHECK_THROWS_WITH_AS(cmd_eval(tiny(dir, 2), "oal", false, log), doctest::Contains("--force"), std::runtime_error);
    ExperimentConfig other = tiny(dir, 1);
    other.set("trainer.beta", "0.5");
    CHECK_THROWS_AS(cmd_eval(other, "oal", false, log), std::runtime_error);
    std::ostringstream warn;
    CHECK_NOTHROW(cmd_eval(tiny(dir, 2), "oal", true, warn));
    CHECK(warn.str().find("warning") != std::string::npos);
    // Scoring keys do not enter the provenance hash.
    ExperimentConfig scores = tiny(dir, 1);
    scores.set("score.kinds", "ebo");
    CHECK(cmd_eval(scores, "oal", false, log).rows.size() == 3);
}

TEST_CASE("stages: train --ablation emits the five module rows under every score") {
    const auto dir = scratch("ablation");
    std::ostringstream log;
    ExperimentConfig cfg = tiny(dir);
    cfg.set("trainer.epochs", "1");
    cmd_gen_data(cfg, log);
    cmd_teacher_train(cfg, false, log);
    cmd_synth_outliers(cfg, false, log);
    cmd_gen_latents(cfg, false, log);
    TrainOptions opts;
    opts.ablation = true;
    cmd_train(cfg, opts, log);
    std::istringstream csv(slurp(dir / "ablation.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "setting,idkd,micl1,micl2,id_accuracy,ood_set,score,fpr95,auroc");
    std::size_t rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 5 * 3 * 4);
    for (const char* tag : {"ablation-i", "ablation-ii", "ablation-iii", "ablation-iv", "ablation-v"})
        CHECK(std::filesystem::exists(dir / (std::string("student_") + tag + ".jsonl")));
}

TEST_CASE("eval of an uninformative untrained model is at chance on every OOD set") {
    const auto dir = scratch("untrained");
    std::ostringstream log;
    ExperimentConfig cfg;
    cfg.out = dir.string();
    cfg.seed = 3;
    cmd_gen_data(cfg, log);
    const ArtifactPaths paths{dir};
    const DataBundle b = load_data(cfg, paths);
    const std::size_t d = cfg.train.feature_width, c = cfg.data.classes;
    const StudentModel blank(Mlp(MlpSpec{{cfg.data.dim, d}, {Activation::Tanh}}, {Matrix(cfg.data.dim, d)}, {Matrix(1, d)},
                                 "student.encoder"),
                             Mlp(MlpSpec{{d, c}, {Activation::Identity}}, {Matrix(d, c)}, {Matrix(1, c)}, "student.head"));
    save_student(paths.student("random").string(), blank, make_meta(cfg, "student"));
    const MetricsReport r = cmd_eval(cfg, "random", false, log);
    for (const SetMetrics& row : r.rows) {
        CAPTURE(row.ood_set);
        CAPTURE(row.score);
        CHECK(std::abs(row.auroc - 0.5) <= 0.1);
    }
}
