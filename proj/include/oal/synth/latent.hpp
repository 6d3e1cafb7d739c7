#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "oal/core/matrix.hpp"
#include "oal/core/rng.hpp"
#include "oal/data/artifact.hpp"

namespace oal {

struct LatentShape {
    std::size_t channels = 4;
    std::size_t height = 8;
    std::size_t width = 16;

    std::size_t size() const { return channels * height * width; }
    void validate() const;
    friend bool operator==(const LatentShape&, const LatentShape&) = default;
};

// A c x h x w latent, row-major (width fastest).
struct LatentBlock {
    LatentShape shape;
    long guidance_class = -1;
    std::vector<double> data;

    double at(std::size_t c, std::size_t h, std::size_t w) const {
        return data[(c * shape.height + h) * shape.width + w];
    }
    void validate() const;
};

// Average over the channel and height axes: out[j] = mean_{c,h} z[c,h,j].
Vector mean_reduce(const LatentBlock& block);
// One reduced row per block.
Matrix mean_reduce(std::span<const LatentBlock> blocks);

// Stand-in for a guidance-conditioned latent sampler:
// z[c,h,:] = P v + tau * eps_{c,h}, with P a seeded width x D map whose
// entries are N(0, 1/D) and eps standard normal per (c,h) row.
class MockLatentGenerator {
public:
    MockLatentGenerator(std::size_t guidance_width, LatentShape shape, double tau, const RngStream& rng);

    LatentBlock generate(std::span<const double> guidance, long guidance_class, RngStream& noise) const;
    Vector project(std::span<const double> guidance) const;

    const Matrix& projection() const { return projection_; }
    const LatentShape& shape() const { return shape_; }

private:
    Matrix projection_;  // width x D
    LatentShape shape_;
    double tau_;
};

struct LatentGenConfig {
    LatentShape shape;
    std::size_t count = 300;
    double tau = 0.25;
};

// `count` latents guided by rows of `guidance`. Latent i uses class
// i mod C and a row of that class drawn uniformly.
std::vector<LatentBlock> generate_latents(const Matrix& guidance, std::span<const std::size_t> guidance_classes,
                                          std::size_t classes, const LatentGenConfig& cfg, const RngStream& rng);

// Latent JSONL: {"shape": [c,h,w], "guidance_class": <int>, "data": [...]}
std::vector<LatentBlock> load_latents(const std::filesystem::path& path,
                                      std::optional<ArtifactMeta>* meta = nullptr);
void save_latents(std::span<const LatentBlock> blocks, const std::filesystem::path& path,
                  const std::optional<ArtifactMeta>& meta = std::nullopt);

}  // namespace oal
