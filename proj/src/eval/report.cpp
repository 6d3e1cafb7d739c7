#include "oal/eval/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "oal/data/feature_io.hpp"
#include "oal/train/student.hpp"

namespace oal {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json hist_json(const Histogram& h) { return {{"edges", h.edges}, {"counts", h.counts}}; }

Histogram hist_from(const nlohmann::json& j) {
    Histogram h;
    h.edges = j.at("edges").get<Vector>();
    h.counts = j.at("counts").get<std::vector<std::size_t>>();
    return h;
}

}  // namespace

const SetMetrics& MetricsReport::find(const std::string& ood_set, const std::string& score) const {
    for (const auto& r : rows)
        if (r.ood_set == ood_set && r.score == score) return r;
    throw std::out_of_range("no metrics row for " + ood_set + "/" + score);
}

std::string MetricsReport::to_csv() const {
    std::ostringstream os;
    os << "ood_set,score,fpr95,auroc\n";
    for (const auto& r : rows) os << r.ood_set << ',' << r.score << ',' << fmt(r.fpr95) << ',' << fmt(r.auroc) << '\n';
    return os.str();
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json j;
    if (meta) j["_meta"] = meta->to_json();
    j["id_accuracy"] = id_accuracy;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows)
        j["rows"].push_back({{"ood_set", r.ood_set}, {"score", r.score}, {"fpr95", r.fpr95}, {"auroc", r.auroc}});
    j["histograms"] = nlohmann::json::array();
    for (const auto& h : histograms) {
        nlohmann::json hj{{"score", h.score}, {"id", hist_json(h.id)}, {"ood", nlohmann::json::object()}};
        for (const auto& [name, oh] : h.ood) hj["ood"][name] = hist_json(oh);
        j["histograms"].push_back(hj);
    }
    return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
    MetricsReport r;
    if (j.contains("_meta")) r.meta = ArtifactMeta::from_json(j["_meta"]);
    r.id_accuracy = j.at("id_accuracy").get<double>();
    for (const auto& row : j.at("rows"))
        r.rows.push_back({row.at("ood_set").get<std::string>(), row.at("score").get<std::string>(),
                          row.at("fpr95").get<double>(), row.at("auroc").get<double>()});
    if (j.contains("histograms"))
        for (const auto& hj : j["histograms"]) {
            ScoreHistograms h{hj.at("score").get<std::string>(), hist_from(hj.at("id")), {}};
            for (const auto& [name, oh] : hj.at("ood").items()) h.ood.emplace_back(name, hist_from(oh));
            r.histograms.push_back(std::move(h));
        }
    return r;
}

Matrix knn_bank(const StudentModel& model, const LabeledDataset& data) {
    Matrix f = model.features(data.subset(Split::Train).inputs);
    normalize_rows_inplace(f);
    return f;
}

MetricsReport evaluate(const StudentModel& model, const LabeledDataset& data, const std::vector<OodTestSet>& ood_sets,
                       const EvalConfig& cfg) {
    if (cfg.scores.empty()) throw std::invalid_argument("evaluate: no score functions requested");
    if (ood_sets.empty()) throw std::invalid_argument("evaluate: no OOD sets");
    const LabeledDataset test = data.subset(Split::Test);
    if (test.size() == 0) throw std::invalid_argument("evaluate: empty ID test split");
    MetricsReport report;
    report.id_accuracy = accuracy(model, test.inputs, test.labels);

    Matrix bank;
    for (const auto& s : cfg.scores)
        if (s.kind == ScoreKind::Knn && bank.rows() == 0) bank = knn_bank(model, data);

    for (const auto& spec : cfg.scores) {
        const std::string name = to_string(spec.kind);
        const Vector id = compute_scores(spec, model, test.inputs, &bank);
        std::vector<Vector> ood;
        double lo = *std::min_element(id.begin(), id.end()), hi = *std::max_element(id.begin(), id.end());
        for (const auto& set : ood_sets) {
            ood.push_back(compute_scores(spec, model, set.inputs, &bank));
            report.rows.push_back({set.name, name, fpr_at_95_tpr(id, ood.back()), auroc(id, ood.back())});
            lo = std::min(lo, *std::min_element(ood.back().begin(), ood.back().end()));
            hi = std::max(hi, *std::max_element(ood.back().begin(), ood.back().end()));
        }
        ScoreHistograms h{name, score_histogram(id, cfg.histogram_bins, lo, hi), {}};
        for (std::size_t s = 0; s < ood_sets.size(); ++s)
            h.ood.emplace_back(ood_sets[s].name, score_histogram(ood[s], cfg.histogram_bins, lo, hi));
        report.histograms.push_back(std::move(h));
    }
    return report;
}

void save_report(const MetricsReport& report, const std::string& csv_path, const std::string& json_path) {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path);
    csv << report.to_csv();
    std::ofstream js(json_path);
    if (!js) throw std::runtime_error("cannot write " + json_path);
    js << report.to_json().dump(2) << '\n';
}

MetricsReport load_report_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return MetricsReport::from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

}  // namespace oal
