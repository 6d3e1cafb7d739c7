#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

namespace oal {

// Provenance stamped on every file the pipeline writes. Stored as an optional
// first JSONL line {"_meta": {...}}; loaders accept files without it.
struct ArtifactMeta {
    std::string kind;
    std::string config_hash;
    std::uint64_t seed = 0;
    bool normalized = false;

    nlohmann::json to_json() const;
    static ArtifactMeta from_json(const nlohmann::json& j);
};

bool is_meta_line(const nlohmann::json& j);
nlohmann::json meta_line(const ArtifactMeta& meta);

// Throws std::runtime_error when both metas are present and their config hash
// or seed differ.
void require_matching(const std::optional<ArtifactMeta>& a, const std::optional<ArtifactMeta>& b,
                      const std::string& what);

}  // namespace oal
