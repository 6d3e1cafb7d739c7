#include "oal/cli/commands.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

#include "oal/train/checkpoint.hpp"
#include "oal/verify/oracles.hpp"

namespace oal {
namespace {

ArtifactPaths prepare(const ExperimentConfig& cfg) {
    cfg.validate();
    ArtifactPaths paths{cfg.out};
    std::filesystem::create_directories(paths.dir);
    std::ofstream os(paths.resolved_config());
    os << cfg.resolved();
    if (!os) throw std::runtime_error("cannot write " + paths.resolved_config().string());
    return paths;
}

void require_input(const std::filesystem::path& path, const char* producer) {
    if (!std::filesystem::exists(path))
        throw std::runtime_error("missing input " + path.string() + " (run " + producer + ")");
}

// Artifacts without a meta line are accepted as-is.
void check_provenance(const std::optional<ArtifactMeta>& found, const ExperimentConfig& cfg,
                      const std::filesystem::path& path, bool force, std::ostream& log) {
    try {
        require_matching(found, make_meta(cfg, "current run"), path.string());
    } catch (const std::runtime_error& e) {
        if (!force) throw std::runtime_error(std::string(e.what()) + " (use --force to override)");
        log << "warning: " << e.what() << '\n';
    }
}

DataBundle load_checked_data(const ExperimentConfig& cfg, const ArtifactPaths& paths, bool force, std::ostream& log) {
    std::optional<ArtifactMeta> meta;
    DataBundle b = load_data(cfg, paths, &meta);
    check_provenance(meta, cfg, paths.id_split(Split::Train), force, log);
    return b;
}

TeacherSnapshot load_checked_teacher(const ExperimentConfig& cfg, const ArtifactPaths& paths, bool force,
                                     std::ostream& log) {
    require_input(paths.teacher(), "teacher-train");
    std::optional<ArtifactMeta> meta;
    TeacherSnapshot t = load_teacher(paths.teacher().string(), &meta);
    check_provenance(meta, cfg, paths.teacher(), force, log);
    return t;
}

OutlierBank load_checked_bank(const ExperimentConfig& cfg, const ArtifactPaths& paths, bool force, std::ostream& log) {
    require_input(paths.outliers(), "synth-outliers");
    require_input(paths.latents(), "gen-latents");
    std::optional<ArtifactMeta> meta;
    OutlierBank bank = load_outliers(paths.outliers(), &meta);
    check_provenance(meta, cfg, paths.outliers(), force, log);
    const auto blocks = load_latents(paths.latents(), &meta);
    check_provenance(meta, cfg, paths.latents(), force, log);
    attach_latents(bank, blocks);
    return bank;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    os << text;
    if (!os) throw std::runtime_error("cannot write " + path.string());
}

std::string tag_for(const AblationSetting& s) {
    std::string roman;
    for (char c : s.label)
        if (c != '(' && c != ')') roman += c;
    return "ablation-" + roman;
}

void save_trained(const ExperimentConfig& cfg, const ArtifactPaths& paths, const std::string& tag,
                  const TrainResult& r) {
    save_student(paths.student(tag).string(), r.model, make_meta(cfg, "student"));
    write_text(paths.train_report(tag), train_report_json(r.report).dump(2) + "\n");
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    if (v.size() < 2) return {m, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

std::string file_safe(std::string s) {
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '-';
    return s;
}

}  // namespace

void cmd_gen_data(const ExperimentConfig& cfg, std::ostream& log) {
    const ArtifactPaths paths = prepare(cfg);
    const DataBundle b = make_data(cfg);
    save_data(b, paths, make_meta(cfg, "data"));
    log << "gen-data: " << b.data.size() << " ID rows, " << b.ood_sets.size() << " OOD sets -> " << paths.dir.string()
        << '\n';
}

void cmd_teacher_train(const ExperimentConfig& cfg, bool force, std::ostream& log) {
    const ArtifactPaths paths = prepare(cfg);
    const DataBundle b = load_checked_data(cfg, paths, force, log);
    const TeacherSnapshot teacher = make_teacher(cfg, b.data);
    save_teacher(paths.teacher().string(), teacher, make_meta(cfg, "teacher"));
    FeatureSet fs = teacher_train_features(teacher, b.data);
    fs.meta = make_meta(cfg, "teacher-features");
    save_features(fs, paths.teacher_features());
    log << "teacher-train: val accuracy " << teacher.val_accuracy() << '\n';
}

void cmd_synth_outliers(const ExperimentConfig& cfg, bool force, std::ostream& log) {
    const ArtifactPaths paths = prepare(cfg);
    const TeacherSnapshot teacher = load_checked_teacher(cfg, paths, force, log);
    require_input(paths.teacher_features(), "teacher-train");
    const FeatureSet fs = load_features(paths.teacher_features());
    check_provenance(fs.meta, cfg, paths.teacher_features(), force, log);
    const OutlierBank bank = make_outliers(cfg, fs, teacher.class_norms(), cfg.data.classes);
    save_outliers(bank, paths.outliers(), make_meta(cfg, "outliers"));
    log << "synth-outliers: " << bank.embeddings.rows() << " outliers\n";
}

void cmd_gen_latents(const ExperimentConfig& cfg, bool force, std::ostream& log) {
    const ArtifactPaths paths = prepare(cfg);
    require_input(paths.outliers(), "synth-outliers");
    std::optional<ArtifactMeta> meta;
    const OutlierBank bank = load_outliers(paths.outliers(), &meta);
    check_provenance(meta, cfg, paths.outliers(), force, log);
    const auto blocks = make_latents(cfg, bank, cfg.data.classes);
    save_latents(blocks, paths.latents(), make_meta(cfg, "latents"));
    log << "gen-latents: " << blocks.size() << " latents\n";
}

void cmd_train(const ExperimentConfig& cfg, const TrainOptions& opts, std::ostream& log) {
    const ArtifactPaths paths = prepare(cfg);
    const DataBundle b = load_checked_data(cfg, paths, opts.force, log);
    const TeacherSnapshot teacher = load_checked_teacher(cfg, paths, opts.force, log);
    const OutlierBank bank = load_checked_bank(cfg, paths, opts.force, log);
    const std::uint64_t seed = stage_seed(cfg.seed, "train");

    const TrainResult oal = train(cfg.train, b.data, &teacher, &bank, seed);
    save_trained(cfg, paths, "oal", oal);
    log << "train: oal val accuracy " << oal.report.val_accuracy << '\n';
    if (opts.vanilla) {
        const TrainResult van = train_vanilla(cfg.train, b.data, seed);
        save_trained(cfg, paths, "vanilla", van);
        log << "train: vanilla val accuracy " << van.report.val_accuracy << '\n';
    }
    if (!opts.ablation) return;

    std::string csv = "setting,idkd,micl1,micl2,id_accuracy,ood_set,score,fpr95,auroc\n";
    for (const AblationSetting& s : ablation_settings()) {
        TrainConfig tc = cfg.train;
        tc.switches = s.switches;
        const TrainResult r = train(tc, b.data, &teacher, &bank, seed);
        const std::string tag = tag_for(s);
        save_trained(cfg, paths, tag, r);
        const MetricsReport m = evaluate(r.model, b.data, b.ood_sets, cfg.eval);
        for (const SetMetrics& row : m.rows)
            csv += s.label + "," + (s.switches.idkd ? "1" : "0") + "," + (s.switches.micl1 ? "1" : "0") + "," +
                   (s.switches.micl2 ? "1" : "0") + "," + num(m.id_accuracy) + "," + row.ood_set + "," + row.score +
                   "," + num(row.fpr95) + "," + num(row.auroc) + "\n";
        log << "train: ablation " << s.label << " id accuracy " << m.id_accuracy << '\n';
    }
    write_text(paths.dir / "ablation.csv", csv);
}

MetricsReport cmd_eval(const ExperimentConfig& cfg, const std::string& tag, bool force, std::ostream& log) {
    const ArtifactPaths paths = prepare(cfg);
    const DataBundle b = load_checked_data(cfg, paths, force, log);
    require_input(paths.student(tag), "train");
    std::optional<ArtifactMeta> meta;
    const StudentModel model = load_student(paths.student(tag).string(), &meta);
    check_provenance(meta, cfg, paths.student(tag), force, log);
    if (model.input_width() != b.data.inputs.cols() || model.classes() != b.data.classes)
        throw std::runtime_error(paths.student(tag).string() + ": model shape does not match the data");
    MetricsReport report = evaluate(model, b.data, b.ood_sets, cfg.eval);
    report.meta = make_meta(cfg, "metrics");
    save_report(report, paths.metrics_csv(tag).string(), paths.metrics_json(tag).string());
    log << "eval " << tag << ": id accuracy " << report.id_accuracy << '\n';
    for (const SetMetrics& r : report.rows)
        log << "  " << r.ood_set << " " << r.score << " fpr95 " << r.fpr95 << " auroc " << r.auroc << '\n';
    return report;
}

void cmd_pipeline(const ExperimentConfig& cfg, std::ostream& log) {
    cmd_gen_data(cfg, log);
    cmd_teacher_train(cfg, false, log);
    cmd_synth_outliers(cfg, false, log);
    cmd_gen_latents(cfg, false, log);
    cmd_train(cfg, TrainOptions{}, log);
    cmd_eval(cfg, "oal", false, log);
    cmd_eval(cfg, "vanilla", false, log);
}

std::string Aggregate::to_csv() const {
    std::string out = "ood_set,score,n,fpr95_mean,fpr95_std,auroc_mean,auroc_std\n";
    for (const auto& r : rows)
        out += r.ood_set + "," + r.score + "," + std::to_string(reports) + "," + num(r.fpr95_mean) + "," +
               num(r.fpr95_std) + "," + num(r.auroc_mean) + "," + num(r.auroc_std) + "\n";
    return out;
}

nlohmann::json Aggregate::to_json() const {
    nlohmann::json j;
    j["reports"] = reports;
    j["id_accuracy"] = {{"mean", id_accuracy_mean}, {"std", id_accuracy_std}};
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows)
        j["rows"].push_back({{"ood_set", r.ood_set},
                             {"score", r.score},
                             {"fpr95", {{"mean", r.fpr95_mean}, {"std", r.fpr95_std}}},
                             {"auroc", {{"mean", r.auroc_mean}, {"std", r.auroc_std}}}});
    return j;
}

Aggregate aggregate_reports(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("report needs at least one metrics file");
    Aggregate a;
    a.reports = reports.size();
    std::vector<double> acc;
    for (const auto& r : reports) acc.push_back(r.id_accuracy);
    std::tie(a.id_accuracy_mean, a.id_accuracy_std) = mean_std(acc);
    for (const SetMetrics& first : reports.front().rows) {
        std::vector<double> fpr, au;
        for (const auto& r : reports) {
            const SetMetrics& m = r.find(first.ood_set, first.score);
            fpr.push_back(m.fpr95);
            au.push_back(m.auroc);
        }
        AggregateRow row{first.ood_set, first.score, 0, 0, 0, 0};
        std::tie(row.fpr95_mean, row.fpr95_std) = mean_std(fpr);
        std::tie(row.auroc_mean, row.auroc_std) = mean_std(au);
        a.rows.push_back(row);
    }
    return a;
}

Aggregate cmd_report(const std::vector<std::string>& inputs, const std::filesystem::path& out_dir, std::ostream& log) {
    std::vector<MetricsReport> reports;
    for (const auto& path : inputs) {
        if (!std::filesystem::exists(path)) throw std::runtime_error("missing input " + path);
        reports.push_back(load_report_json(path));
    }
    const Aggregate a = aggregate_reports(reports);
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "summary.csv", a.to_csv());
    write_text(out_dir / "summary.json", a.to_json().dump(2) + "\n");
    for (std::size_t k = 0; k < reports.size(); ++k) {
        for (const ScoreHistograms& h : reports[k].histograms) {
            for (const auto& [set, ood] : h.ood) {
                std::string csv = "lo,hi,id,ood\n";
                for (std::size_t b = 0; b < h.id.counts.size(); ++b)
                    csv += num(h.id.edges[b]) + "," + num(h.id.edges[b + 1]) + "," + std::to_string(h.id.counts[b]) +
                           "," + std::to_string(ood.counts.at(b)) + "\n";
                write_text(out_dir / ("hist_" + file_safe(h.score) + "_" + file_safe(set) + "_" + std::to_string(k) +
                                      ".csv"),
                           csv);
            }
        }
    }
    log << "report: " << reports.size() << " reports, " << a.rows.size() << " rows -> " << out_dir.string() << '\n';
    return a;
}

bool cmd_verify_oracles(std::uint64_t seed, bool inject_fault, std::ostream& log) {
    verify::SuiteOptions opts;
    opts.seed = seed;
    if (inject_fault) opts.gradient_fault = 1.0;
    const auto results = verify::run_oracle_suite(opts);
    log << verify::format_table(results);
    bool ok = true;
    for (const auto& r : results) ok = ok && r.passed;
    log << (ok ? "all oracles passed\n" : "ORACLE FAILURE\n");
    return ok;
}

}  // namespace oal
