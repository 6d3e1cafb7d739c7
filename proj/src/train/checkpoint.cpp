#include "oal/train/checkpoint.hpp"

#include <fstream>
#include <map>
#include <stdexcept>

namespace oal {

void save_parameters(const std::string& path, std::span<const Parameter* const> params,
                     const std::optional<ArtifactMeta>& meta) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    if (meta) out << meta_line(*meta).dump() << '\n';
    for (const Parameter* p : params) {
        nlohmann::json j;
        j["name"] = p->name;
        j["rows"] = p->value.rows();
        j["cols"] = p->value.cols();
        j["data"] = p->value.values();
        out << j.dump() << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<Parameter> load_parameters(const std::string& path, std::optional<ArtifactMeta>* meta) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    if (meta) meta->reset();
    std::vector<Parameter> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (is_meta_line(j)) {
                if (meta) *meta = ArtifactMeta::from_json(j["_meta"]);
                continue;
            }
            const auto rows = j.at("rows").get<std::size_t>();
            const auto cols = j.at("cols").get<std::size_t>();
            auto data = j.at("data").get<std::vector<double>>();
            if (data.size() != rows * cols) throw std::runtime_error("data length does not match rows*cols");
            out.emplace_back(j.at("name").get<std::string>(), Matrix(rows, cols, std::move(data)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

namespace {

std::vector<const Parameter*> collect(const Mlp& a, const Mlp& b) {
    std::vector<const Parameter*> out = a.parameters();
    for (const Parameter* p : b.parameters()) out.push_back(p);
    return out;
}

// Rebuilds an MLP named `prefix` from its .w<l>/.b<l> records.
Mlp rebuild(const std::map<std::string, Matrix>& records, const std::string& prefix, Activation hidden,
            Activation last, const std::string& path) {
    std::vector<Matrix> weights, biases;
    for (std::size_t l = 0;; ++l) {
        auto w = records.find(prefix + ".w" + std::to_string(l));
        if (w == records.end()) break;
        auto b = records.find(prefix + ".b" + std::to_string(l));
        if (b == records.end()) throw std::runtime_error(path + ": missing " + prefix + ".b" + std::to_string(l));
        weights.push_back(w->second);
        biases.push_back(b->second);
    }
    if (weights.empty()) throw std::runtime_error(path + ": no parameters named " + prefix);
    MlpSpec spec;
    spec.widths.push_back(weights.front().rows());
    for (const Matrix& w : weights) spec.widths.push_back(w.cols());
    spec.activations.assign(weights.size(), hidden);
    spec.activations.back() = last;
    return Mlp(spec, std::move(weights), std::move(biases), prefix);
}

std::map<std::string, Matrix> by_name(std::vector<Parameter> params) {
    std::map<std::string, Matrix> out;
    for (Parameter& p : params) out.emplace(p.name, std::move(p.value));
    return out;
}

}  // namespace

void save_student(const std::string& path, const StudentModel& model, const std::optional<ArtifactMeta>& meta) {
    if (model.encoder().weight(0).name != "student.encoder.w0" || model.head().weight(0).name != "student.head.w0")
        throw std::invalid_argument("student parameters must be named student.encoder.* and student.head.*");
    save_parameters(path, collect(model.encoder(), model.head()), meta);
}

StudentModel load_student(const std::string& path, std::optional<ArtifactMeta>* meta) {
    const auto records = by_name(load_parameters(path, meta));
    return StudentModel(rebuild(records, "student.encoder", Activation::Tanh, Activation::Tanh, path),
                        rebuild(records, "student.head", Activation::Identity, Activation::Identity, path));
}

void save_teacher(const std::string& path, const TeacherSnapshot& teacher, const std::optional<ArtifactMeta>& meta) {
    auto params = collect(teacher.body(), teacher.head());
    const Parameter norms("teacher.class_norms", Matrix::row_vector(teacher.class_norms()));
    const Parameter acc("teacher.val_accuracy", Matrix(1, 1, teacher.val_accuracy()));
    params.push_back(&norms);
    params.push_back(&acc);
    save_parameters(path, params, meta);
}

TeacherSnapshot load_teacher(const std::string& path, std::optional<ArtifactMeta>* meta) {
    const auto records = by_name(load_parameters(path, meta));
    auto norms = records.find("teacher.class_norms");
    auto acc = records.find("teacher.val_accuracy");
    if (norms == records.end() || acc == records.end()) throw std::runtime_error(path + ": not a teacher snapshot");
    return TeacherSnapshot(rebuild(records, "teacher.body", Activation::Tanh, Activation::Tanh, path),
                           rebuild(records, "teacher.head", Activation::Identity, Activation::Identity, path),
                           Vector(norms->second.values().begin(), norms->second.values().end()),
                           acc->second(0, 0));
}

}  // namespace oal
