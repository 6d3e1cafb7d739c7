#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oal/data/dataset.hpp"
#include "oal/data/teacher.hpp"
#include "oal/eval/report.hpp"
#include "oal/synth/latent.hpp"
#include "oal/synth/outlier_synth.hpp"
#include "oal/train/trainer.hpp"

namespace oal {

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string out = "out";
    MixtureConfig data;
    OodConfig ood;
    TeacherConfig teacher;
    SynthConfig synth;
    LatentGenConfig latent;
    TrainConfig train;
    EvalConfig eval = default_eval();

    static EvalConfig default_eval();

    // Every recognised key, in documentation order.
    static const std::vector<std::string>& keys();
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;

    void validate() const;
    // "key = value" lines for every key.
    std::string resolved() const;
    // FNV-1a over the resolved config without seed, out and the score.* keys,
    // as 16 hex digits.
    std::string hash() const;
};

// Flat text: one "key = value" per line, '#' starts a comment. Unknown or
// repeated keys and malformed values are errors naming the line.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

}  // namespace oal
