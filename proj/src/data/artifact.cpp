#include "oal/data/artifact.hpp"

#include <stdexcept>

namespace oal {

nlohmann::json ArtifactMeta::to_json() const {
    return {{"kind", kind}, {"config_hash", config_hash}, {"seed", seed}, {"normalized", normalized}};
}

ArtifactMeta ArtifactMeta::from_json(const nlohmann::json& j) {
    ArtifactMeta m;
    m.kind = j.value("kind", "");
    m.config_hash = j.value("config_hash", "");
    m.seed = j.value("seed", std::uint64_t{0});
    m.normalized = j.value("normalized", false);
    return m;
}

bool is_meta_line(const nlohmann::json& j) { return j.is_object() && j.contains("_meta"); }

nlohmann::json meta_line(const ArtifactMeta& meta) { return {{"_meta", meta.to_json()}}; }

void require_matching(const std::optional<ArtifactMeta>& a, const std::optional<ArtifactMeta>& b,
                      const std::string& what) {
    if (!a || !b) return;
    if (a->config_hash != b->config_hash || a->seed != b->seed) {
        throw std::runtime_error(what + ": artifacts come from different runs (" + a->kind + " config " +
                                 a->config_hash + " seed " + std::to_string(a->seed) + " vs " + b->kind +
                                 " config " + b->config_hash + " seed " + std::to_string(b->seed) + ")");
    }
}

}  // namespace oal
