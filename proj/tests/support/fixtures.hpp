#pragma once

// Small end-to-end inputs for trainer and scoring tests. Test-only.

#include "oal/data/dataset.hpp"
#include "oal/data/teacher.hpp"
#include "oal/synth/latent.hpp"
#include "oal/synth/outlier_synth.hpp"

namespace oal::testing {

struct ToyWorld {
    LabeledDataset data;
    TeacherSnapshot teacher;
    OutlierBank bank;
};

inline ToyWorld make_toy_world(std::uint64_t seed, std::size_t per_class = 40, double separation = 4.0) {
    MixtureConfig mc;
    mc.classes = 3;
    mc.dim = 4;
    mc.train_per_class = per_class;
    mc.val_per_class = per_class / 2;
    mc.test_per_class = per_class / 2;
    mc.separation = separation;
    LabeledDataset data = gen_id_mixture(mc, seed);

    TeacherConfig tc;
    tc.feature_width = 12;
    tc.hidden = 12;
    tc.epochs = 20;
    tc.lr = 0.1;
    TeacherSnapshot teacher = train_teacher(data, tc, 6, seed);

    const LabeledDataset tr = data.subset(Split::Train);
    auto nb = NormalizedFeatureBank::from_raw(teacher.features(tr.inputs), tr.labels, data.classes);
    SynthConfig sc;
    sc.k = 3;
    sc.top = 4;
    sc.candidates = 20;
    sc.keep = 8;
    OutlierBank bank = synthesize_outliers(nb, teacher.class_norms(), sc, RngStream(seed, "synth"));
    LatentGenConfig lc;
    lc.shape = {2, 2, 5};
    lc.count = 30;
    auto blocks = generate_latents(bank.embeddings, bank.embedding_classes, data.classes, lc, RngStream(seed, "latent"));
    bank.latent_features = mean_reduce(blocks);
    for (const auto& b : blocks) bank.latent_classes.push_back(static_cast<std::size_t>(b.guidance_class));
    return {std::move(data), std::move(teacher), std::move(bank)};
}

}  // namespace oal::testing
