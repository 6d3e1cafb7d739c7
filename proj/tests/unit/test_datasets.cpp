#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "oal/core/mlp.hpp"
#include "oal/core/numeric.hpp"
#include "oal/data/dataset.hpp"
#include "oal/data/feature_io.hpp"
#include "oal/data/teacher.hpp"

using namespace oal;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "oal_test_datasets";
    fs::create_directories(dir);
    return dir / name;
}

MixtureConfig small_two_class() {
    MixtureConfig cfg;
    cfg.classes = 2;
    cfg.dim = 2;
    cfg.train_per_class = 50;
    cfg.val_per_class = 20;
    cfg.test_per_class = 20;
    cfg.separation = 12.0;
    cfg.spread = 0.5;
    return cfg;
}

}  // namespace

TEST_CASE("gen_id_mixture: zero spread puts every point on its class mean") {
    MixtureConfig cfg;
    cfg.spread = 0.0;
    cfg.train_per_class = 4;
    cfg.val_per_class = 1;
    cfg.test_per_class = 1;
    auto d = gen_id_mixture(cfg, 3);
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.dim(); ++j) CHECK(d.inputs(i, j) == d.class_means(d.labels[i], j));
}

TEST_CASE("gen_id_mixture: class means are equidistant") {
    MixtureConfig cfg;
    auto d = gen_id_mixture(cfg, 1);
    for (std::size_t a = 0; a < cfg.classes; ++a)
        for (std::size_t b = a + 1; b < cfg.classes; ++b) {
            double s = 0.0;
            for (std::size_t j = 0; j < cfg.dim; ++j) s += std::pow(d.class_means(a, j) - d.class_means(b, j), 2);
            CHECK(std::sqrt(s) == doctest::Approx(cfg.separation).epsilon(1e-12));
        }
}

TEST_CASE("gen_id_mixture: deterministic and split-consistent") {
    MixtureConfig cfg;
    auto a = gen_id_mixture(cfg, 17);
    auto b = gen_id_mixture(cfg, 17);
    CHECK(a.inputs == b.inputs);
    CHECK(a.labels == b.labels);
    CHECK(!(a.inputs == gen_id_mixture(cfg, 18).inputs));
    CHECK(a.subset(Split::Train).size() == cfg.classes * cfg.train_per_class);
    CHECK(a.subset(Split::Val).size() == cfg.classes * cfg.val_per_class);
    CHECK(a.subset(Split::Test).size() == cfg.classes * cfg.test_per_class);
    a.validate();
}

TEST_CASE("gen_id_mixture: invalid dimensions are rejected") {
    MixtureConfig cfg;
    cfg.classes = 1;
    CHECK_THROWS_AS(gen_id_mixture(cfg, 0), std::invalid_argument);
    cfg.classes = 9;
    cfg.dim = 8;
    CHECK_THROWS_AS(gen_id_mixture(cfg, 0), std::invalid_argument);
    cfg.classes = 3;
    cfg.train_per_class = 0;
    CHECK_THROWS_AS(gen_id_mixture(cfg, 0), std::invalid_argument);
}

TEST_CASE("gen_id_mixture: well-separated 2-class data is linearly separable") {
    auto d = gen_id_mixture(small_two_class(), 5);
    auto train = d.subset(Split::Train);
    MlpSpec linear{{2, 2}, {Activation::Identity}};
    Mlp net(linear, RngStream(1));
    auto params = net.parameters();
    for (int step = 0; step < 300; ++step) {
        zero_grads(params);
        Tape tape;
        Var loss = ad::cross_entropy(net.forward(tape, tape.input(train.inputs)), train.labels);
        tape.backward(loss);
        sgd_step(params, 0.1);
    }
    Matrix logits = net.forward(d.inputs);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < d.size(); ++i) correct += argmax(logits.row(i)) == d.labels[i];
    CHECK(correct == d.size());
}

TEST_CASE("gen_ood_sets: every set honours its margin (brute-force scan)") {
    MixtureConfig mc;
    auto id = gen_id_mixture(mc, 2);
    OodConfig oc;
    auto sets = gen_ood_sets(id, oc, mc.spread, 2);
    REQUIRE(sets.size() == 3);
    for (const auto& s : sets) {
        CAPTURE(s.name);
        CHECK(s.inputs.rows() == oc.samples_per_set);
        double min_d = 1e300;
        for (std::size_t i = 0; i < s.inputs.rows(); ++i)
            for (std::size_t c = 0; c < mc.classes; ++c) {
                double d2 = 0.0;
                for (std::size_t j = 0; j < mc.dim; ++j) d2 += std::pow(s.inputs(i, j) - id.class_means(c, j), 2);
                min_d = std::min(min_d, std::sqrt(d2));
            }
        CHECK(min_d > s.margin);
    }
    CHECK(sets[0].name == "shifted-cluster");
    CHECK(sets[0].margin == oc.near_margin);
}

TEST_CASE("gen_ood_sets: shell lies far beyond the ID extent") {
    MixtureConfig mc;
    auto id = gen_id_mixture(mc, 4);
    OodConfig oc;
    oc.kinds = {OodKind::Shell};
    auto sets = gen_ood_sets(id, oc, mc.spread, 4);
    double extent = 0.0;
    for (std::size_t i = 0; i < id.size(); ++i) extent = std::max(extent, l2_norm(id.inputs.row(i)));
    for (std::size_t i = 0; i < sets[0].inputs.rows(); ++i) CHECK(l2_norm(sets[0].inputs.row(i)) > 2.0 * extent);
}

TEST_CASE("gen_ood_sets: shifted cluster sits between the class cores") {
    MixtureConfig mc;
    auto id = gen_id_mixture(mc, 4);
    OodConfig oc;
    oc.kinds = {OodKind::ShiftedCluster};
    auto s = gen_ood_sets(id, oc, mc.spread, 4)[0];
    // Sample mean should be ~separation away from every class mean.
    Vector mean(mc.dim, 0.0);
    for (std::size_t i = 0; i < s.inputs.rows(); ++i)
        for (std::size_t j = 0; j < mc.dim; ++j) mean[j] += s.inputs(i, j) / s.inputs.rows();
    for (std::size_t c = 0; c < mc.classes; ++c) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < mc.dim; ++j) d2 += std::pow(mean[j] - id.class_means(c, j), 2);
        CHECK(std::sqrt(d2) == doctest::Approx(mc.separation).epsilon(0.1));
    }
}

TEST_CASE("gen_ood_sets: empty kinds and unsatisfiable margins") {
    auto id = gen_id_mixture(MixtureConfig{}, 1);
    OodConfig oc;
    oc.kinds = {};
    CHECK(gen_ood_sets(id, oc, 1.0, 1).empty());
    oc.kinds = {OodKind::UniformBox};
    oc.far_margin = 1e6;
    oc.samples_per_set = 10;
    CHECK_THROWS_AS(gen_ood_sets(id, oc, 1.0, 1), std::runtime_error);
    CHECK(ood_kind_from_string("shell") == OodKind::Shell);
    CHECK_THROWS_AS(ood_kind_from_string("moon"), std::invalid_argument);
}

TEST_CASE("train_teacher: separable data reaches perfect validation accuracy") {
    auto d = gen_id_mixture(small_two_class(), 8);
    TeacherConfig tc;
    tc.feature_width = 8;
    tc.hidden = 8;
    tc.epochs = 20;
    auto t = train_teacher(d, tc, 4, 8);
    CHECK(t.val_accuracy() == 1.0);
    CHECK(t.feature_width() == 8);
    CHECK(t.classes() == 2);
}

TEST_CASE("train_teacher: snapshot is referentially transparent and calibrated to sum one") {
    MixtureConfig mc;
    mc.train_per_class = 40;
    auto d = gen_id_mixture(mc, 9);
    TeacherConfig tc;
    tc.epochs = 3;
    auto t = train_teacher(d, tc, 16, 9);
    auto test = d.subset(Split::Test);
    CHECK(t.features(test.inputs) == t.features(test.inputs));
    Matrix p = t.probabilities(test.inputs);
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double s = 0.0;
        for (double v : p.row(i)) s += v;
        CHECK(std::abs(s - 1.0) < 1e-12);
    }
    CHECK(t.class_norms().size() == mc.classes);
    for (double n : t.class_norms()) CHECK(n > 0.0);
    auto again = train_teacher(d, tc, 16, 9);
    CHECK(again.features(test.inputs) == t.features(test.inputs));
}

TEST_CASE("train_teacher: teacher must be wider than the student") {
    auto d = gen_id_mixture(small_two_class(), 8);
    TeacherConfig tc;
    tc.feature_width = 16;
    CHECK_THROWS_AS(train_teacher(d, tc, 16, 1), std::invalid_argument);
}

TEST_CASE("feature files round-trip bit-exactly") {
    RngStream rng(5, "io");
    FeatureSet s;
    s.vectors = Matrix(3, 4);
    for (double& v : s.vectors.values()) v = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
    s.labels = {0, 2, -1};
    s.meta = ArtifactMeta{"features", "abc", 7, false};
    auto path = temp_file("roundtrip.jsonl");
    save_features(s, path);
    auto back = load_features(path);
    CHECK(back.labels == s.labels);
    CHECK(back.vectors == s.vectors);
    REQUIRE(back.meta.has_value());
    CHECK(back.meta->seed == 7);
}

TEST_CASE("feature files: width mismatch names the line; empty file is an empty set") {
    auto bad = temp_file("bad.jsonl");
    {
        std::ofstream out(bad);
        out << R"({"label": 0, "vec": [1.0, 2.0]})" << '\n';
        out << R"({"label": 1, "vec": [1.0, 2.0, 3.0]})" << '\n';
    }
    try {
        load_features(bad);
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
    auto garbage = temp_file("garbage.jsonl");
    {
        std::ofstream out(garbage);
        out << R"({"label": 0, "vec": [1.0]})" << '\n' << "{not json" << '\n';
    }
    CHECK_THROWS_AS(load_features(garbage), std::runtime_error);
    auto empty = temp_file("empty.jsonl");
    { std::ofstream out(empty); }
    auto e = load_features(empty);
    CHECK(e.size() == 0);
}

TEST_CASE("normalize_rows gives unit rows") {
    FeatureSet s;
    s.vectors = Matrix{{3.0, 4.0}, {0.0, 0.0}, {-1.0, 1.0}};
    s.labels = {0, 0, 0};
    auto n = normalize_rows(s);
    CHECK(n.normalized);
    CHECK(n.vectors(0, 0) == doctest::Approx(0.6));
    CHECK(n.vectors(1, 0) == 0.0);
    CHECK(std::abs(l2_norm(n.vectors.row(2)) - 1.0) < 1e-15);
}
