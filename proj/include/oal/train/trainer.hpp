#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "oal/data/dataset.hpp"
#include "oal/data/teacher.hpp"
#include "oal/idkd/idkd.hpp"
#include "oal/micl/micl.hpp"
#include "oal/synth/outlier_synth.hpp"
#include "oal/train/student.hpp"

namespace oal {

struct LossWeights {
    double alpha1 = 4.0;  // logit KD
    double alpha2 = 8.0;  // feature KD
    double beta = 0.1;    // MI between f_in and aligned k-NN outliers
    double gamma = 0.2;   // MI between f_in and aligned latent outliers
};

struct ModuleSwitches {
    bool idkd = true;
    bool micl1 = true;
    bool micl2 = true;
};

// How outliers are paired with the ID minibatch in the MI terms. Independent
// draws each outlier uniformly from the bank; ClassMatched draws it from the
// outliers synthesized for the ID row's own class.
enum class Pairing { Independent, ClassMatched };
std::string to_string(Pairing p);
Pairing parse_pairing(std::string_view s);

struct TrainConfig {
    LossWeights weights;
    ModuleSwitches switches;
    double lr = 0.005;
    std::size_t epochs = 60;
    std::size_t batch = 32;
    std::vector<std::size_t> encoder_hidden{32};
    std::size_t feature_width = 16;
    std::size_t phi_hidden = 32;
    std::size_t align_hidden = 32;
    std::size_t q_hidden = 32;
    double q_lr = 0.01;
    std::size_t q_steps = 1;
    KdDirection kd_direction = KdDirection::StudentFirst;
    Pairing pairing = Pairing::Independent;

    void validate() const;
    // Vanilla: every auxiliary term switched off.
    static TrainConfig vanilla(TrainConfig base);
};

enum Component : std::size_t { kCe = 0, kLogitKd, kFeatureKd, kMicl1, kMicl2, kComponentCount };
const char* component_name(std::size_t c);

// Per-component weights actually applied: zero for switched-off terms.
std::array<double, kComponentCount> effective_weights(const TrainConfig& cfg);

// Ablation rows (i)-(v): none, IDKD, IDKD+MICL1, MICL1+MICL2, all.
struct AblationSetting {
    std::string label;
    ModuleSwitches switches;
};
std::vector<AblationSetting> ablation_settings();

struct EpochLosses {
    std::array<double, kComponentCount> components{};
    double total = 0.0;
};

struct TrainReport {
    std::vector<EpochLosses> epochs;
    std::array<double, kComponentCount> weights{};
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
};

// Auxiliary trainable nets. phi maps teacher features to the student width,
// align maps outlier embeddings (teacher width) and align_latent maps reduced
// latents (latent width) into the same space; q1/q2 are the variational
// conditionals for the two MI terms.
struct OalNets {
    DomainTransferNet phi;
    AlignmentNet align;
    AlignmentNet align_latent;
    VariationalConditional q1;
    VariationalConditional q2;

    static OalNets create(const TrainConfig& cfg, std::size_t teacher_width, std::size_t latent_width,
                          const RngStream& rng);
    std::vector<Parameter*> trainable();  // phi and alignment nets
};

struct TrainBatch {
    Matrix x;
    std::vector<std::size_t> labels;
    Matrix teacher_features;  // empty when IDKD is inactive
    Matrix teacher_probs;
    Matrix outlier_embeddings;  // empty when MICL1 is inactive
    Matrix outlier_latents;     // empty when MICL2 is inactive
};

struct LossTerms {
    Var total;
    std::array<double, kComponentCount> values{};
    std::array<double, kComponentCount> weights{};
};

// Builds the weighted total on `tape`. Inactive terms (zero effective weight)
// are neither built nor differentiated and report 0.
LossTerms total_loss(Tape& tape, const TrainBatch& batch, StudentModel& model, OalNets& nets, const TrainConfig& cfg);

struct TrainResult {
    StudentModel model;
    OalNets nets;
    TrainReport report;
};

// teacher may be null and bank may be null only when the terms needing them are inactive.
TrainResult train(const TrainConfig& cfg, const LabeledDataset& data, const TeacherSnapshot* teacher,
                  const OutlierBank* bank, std::uint64_t seed);
TrainResult train_vanilla(const TrainConfig& cfg, const LabeledDataset& data, std::uint64_t seed);

}  // namespace oal
