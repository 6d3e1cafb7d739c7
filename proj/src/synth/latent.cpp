#include "oal/synth/latent.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "oal/simd/kernels.hpp"

namespace oal {

using nlohmann::json;

void LatentShape::validate() const {
    if (channels == 0 || height == 0 || width == 0) throw std::invalid_argument("latent shape must be positive");
}

void LatentBlock::validate() const {
    shape.validate();
    if (data.size() != shape.size()) {
        throw std::invalid_argument("latent data length " + std::to_string(data.size()) + " does not match shape " +
                                    std::to_string(shape.channels) + "x" + std::to_string(shape.height) + "x" +
                                    std::to_string(shape.width));
    }
}

Vector mean_reduce(const LatentBlock& block) {
    block.validate();
    const std::size_t w = block.shape.width;
    const std::size_t rows = block.shape.channels * block.shape.height;
    Vector out(w, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < w; ++j) out[j] += block.data[r * w + j];
    for (double& v : out) v /= static_cast<double>(rows);
    return out;
}

Matrix mean_reduce(std::span<const LatentBlock> blocks) {
    if (blocks.empty()) return Matrix();
    Matrix out(blocks.size(), blocks.front().shape.width);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].shape.width != out.cols()) throw std::invalid_argument("latent batch has mixed widths");
        Vector r = mean_reduce(blocks[i]);
        std::copy(r.begin(), r.end(), out.row(i).data());
    }
    return out;
}

MockLatentGenerator::MockLatentGenerator(std::size_t guidance_width, LatentShape shape, double tau, const RngStream& rng)
    : projection_(shape.width, guidance_width), shape_(shape), tau_(tau) {
    shape_.validate();
    if (guidance_width == 0) throw std::invalid_argument("latent generator: guidance width must be positive");
    if (tau < 0.0) throw std::invalid_argument("latent generator: tau must be non-negative");
    RngStream prng = rng.child("projection");
    const double sd = 1.0 / std::sqrt(static_cast<double>(guidance_width));
    for (double& v : projection_.values()) v = sd * prng.normal();
}

Vector MockLatentGenerator::project(std::span<const double> guidance) const {
    if (guidance.size() != projection_.cols()) throw std::invalid_argument("latent generator: guidance width mismatch");
    Vector out(projection_.rows());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = simd::dot(projection_.row(j).data(), guidance.data(), guidance.size());
    return out;
}

LatentBlock MockLatentGenerator::generate(std::span<const double> guidance, long guidance_class, RngStream& noise) const {
    const Vector base = project(guidance);
    LatentBlock b;
    b.shape = shape_;
    b.guidance_class = guidance_class;
    b.data.resize(shape_.size());
    const std::size_t rows = shape_.channels * shape_.height;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < shape_.width; ++j) {
            const double eps = tau_ > 0.0 ? noise.normal() : 0.0;
            b.data[r * shape_.width + j] = base[j] + tau_ * eps;
        }
    return b;
}

std::vector<LatentBlock> generate_latents(const Matrix& guidance, std::span<const std::size_t> guidance_classes,
                                          std::size_t classes, const LatentGenConfig& cfg, const RngStream& rng) {
    cfg.shape.validate();
    if (guidance.rows() != guidance_classes.size()) throw std::invalid_argument("generate_latents: class tags mismatch");
    if (classes == 0) throw std::invalid_argument("generate_latents: no classes");
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < guidance_classes.size(); ++i) {
        if (guidance_classes[i] >= classes) throw std::invalid_argument("generate_latents: class tag out of range");
        by_class[guidance_classes[i]].push_back(i);
    }
    MockLatentGenerator gen(guidance.cols(), cfg.shape, cfg.tau, rng);
    RngStream pick = rng.child("pick");
    RngStream noise = rng.child("noise");
    std::vector<LatentBlock> out;
    out.reserve(cfg.count);
    for (std::size_t i = 0; i < cfg.count; ++i) {
        const std::size_t c = i % classes;
        if (by_class[c].empty()) throw std::invalid_argument("generate_latents: no guidance rows for class " + std::to_string(c));
        const std::size_t row = by_class[c][pick.index(by_class[c].size())];
        out.push_back(gen.generate(guidance.row(row), static_cast<long>(c), noise));
    }
    return out;
}

std::vector<LatentBlock> load_latents(const std::filesystem::path& path, std::optional<ArtifactMeta>* meta) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open latent file " + path.string());
    std::vector<LatentBlock> out;
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
            if (meta) *meta = ArtifactMeta::from_json(j["_meta"]);
            continue;
        }
        if (!j.is_object() || !j.contains("shape") || !j.contains("data") || !j["shape"].is_array() ||
            j["shape"].size() != 3 || !j["data"].is_array()) {
            throw std::runtime_error(where + ": malformed latent record");
        }
        LatentBlock b;
        try {
            b.shape = LatentShape{j["shape"][0].get<std::size_t>(), j["shape"][1].get<std::size_t>(),
                                  j["shape"][2].get<std::size_t>()};
            b.guidance_class = j.value("guidance_class", -1L);
            b.data = j["data"].get<std::vector<double>>();
        } catch (const json::exception& e) {
            throw std::runtime_error(where + ": malformed latent record: " + e.what());
        }
        try {
            b.validate();
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(where + ": " + e.what());
        }
        out.push_back(std::move(b));
    }
    return out;
}

void save_latents(std::span<const LatentBlock> blocks, const std::filesystem::path& path,
                  const std::optional<ArtifactMeta>& meta) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write latent file " + path.string());
    if (meta) out << meta_line(*meta).dump() << '\n';
    for (const LatentBlock& b : blocks) {
        b.validate();
        json j = {{"shape", {b.shape.channels, b.shape.height, b.shape.width}},
                  {"guidance_class", b.guidance_class},
                  {"data", b.data}};
        out << j.dump() << '\n';
    }
}

}  // namespace oal
