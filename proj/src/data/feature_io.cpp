#include "oal/data/feature_io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace oal {

using nlohmann::json;

FeatureSet load_features(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open feature file " + path.string());
    FeatureSet set;
    std::vector<double> flat;
    std::size_t width = 0;
    bool have_width = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error(where + ": malformed record: " + e.what());
        }
        if (is_meta_line(j)) {
            set.meta = ArtifactMeta::from_json(j["_meta"]);
            set.normalized = set.meta->normalized;
            continue;
        }
        if (!j.is_object() || !j.contains("label") || !j.contains("vec") || !j["label"].is_number_integer() ||
            !j["vec"].is_array()) {
            throw std::runtime_error(where + ": malformed record: expected {\"label\": int, \"vec\": [floats]}");
        }
        const auto& vec = j["vec"];
        if (!have_width) {
            width = vec.size();
            have_width = true;
        } else if (vec.size() != width) {
            throw std::runtime_error(where + ": vector width " + std::to_string(vec.size()) + " differs from " +
                                     std::to_string(width));
        }
        for (const auto& v : vec) {
            if (!v.is_number()) throw std::runtime_error(where + ": non-numeric vector entry");
            const double x = v.get<double>();
            if (!std::isfinite(x)) throw std::runtime_error(where + ": non-finite vector entry");
            flat.push_back(x);
        }
        set.labels.push_back(j["label"].get<long>());
    }
    set.vectors = Matrix(set.labels.size(), width, std::move(flat));
    return set;
}

void save_features(const FeatureSet& set, const std::filesystem::path& path) {
    if (set.vectors.rows() != set.labels.size()) throw std::invalid_argument("feature set labels/vectors mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write feature file " + path.string());
    if (set.meta) {
        ArtifactMeta m = *set.meta;
        m.normalized = set.normalized;
        out << meta_line(m).dump() << '\n';
    }
    for (std::size_t i = 0; i < set.size(); ++i) {
        auto row = set.vectors.row(i);
        json j = {{"label", set.labels[i]}, {"vec", std::vector<double>(row.begin(), row.end())}};
        out << j.dump() << '\n';
    }
}

void normalize_rows_inplace(Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        double s = 0.0;
        for (double v : r) s += v * v;
        const double n = std::sqrt(s);
        if (n > 0.0)
            for (double& v : r) v /= n;
    }
}

FeatureSet normalize_rows(FeatureSet set) {
    normalize_rows_inplace(set.vectors);
    set.normalized = true;
    return set;
}

}  // namespace oal
