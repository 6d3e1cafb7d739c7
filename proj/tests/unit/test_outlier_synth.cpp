#include <cmath>
#include <filesystem>
#include <fstream>

#include "../support/knn_oracle.hpp"
#include "doctest.h"
#include "oal/core/numeric.hpp"
#include "oal/synth/knn.hpp"
#include "oal/synth/latent.hpp"
#include "oal/synth/outlier_synth.hpp"

using namespace oal;
namespace fs = std::filesystem;

namespace {

const Matrix kTriangle{{0.0, 0.0}, {3.0, 0.0}, {0.0, 4.0}};

Matrix random_bank(RngStream& rng, std::size_t n, std::size_t d) {
    Matrix m(n, d);
    for (double& v : m.values()) v = rng.normal();
    return m;
}

}  // namespace

TEST_CASE("knn_distance: small bank examples") {
    CHECK(knn_distance(kTriangle.row(0), kTriangle, 1, 0) == 3.0);
    CHECK(knn_distance(kTriangle.row(0), kTriangle, 2, 0) == 4.0);
    Matrix dup{{1.0, 1.0}, {1.0, 1.0}, {5.0, 5.0}};
    CHECK(knn_distance(dup.row(0), dup, 1, 0) == 0.0);
    // Query not in the bank uses every point.
    CHECK(knn_distance(kTriangle.row(0), kTriangle, 1) == 0.0);
}

TEST_CASE("knn_distance: errors") {
    CHECK_THROWS_AS(knn_distance(kTriangle.row(0), kTriangle, 3, 0), std::out_of_range);
    CHECK_THROWS_AS(knn_distance(kTriangle.row(0), kTriangle, 0), std::out_of_range);
    CHECK_THROWS_AS(knn_distance(kTriangle.row(0), Matrix(0, 2), 1), std::invalid_argument);
}

TEST_CASE("knn_distance: invariant under bank permutation and rigid rotation") {
    RngStream rng(21, "knn-invariance");
    for (int trial = 0; trial < 20; ++trial) {
        Matrix bank = random_bank(rng, 30, 2);
        Vector q{rng.normal(), rng.normal()};
        const double base = knn_distance(q, bank, 5);
        Matrix reversed(bank.rows(), 2);
        for (std::size_t i = 0; i < bank.rows(); ++i)
            for (std::size_t j = 0; j < 2; ++j) reversed(i, j) = bank(bank.rows() - 1 - i, j);
        CHECK(knn_distance(q, reversed, 5) == base);
        const double th = rng.uniform(0, 6.28);
        const double c = std::cos(th), s = std::sin(th);
        Matrix rot(bank.rows(), 2);
        for (std::size_t i = 0; i < bank.rows(); ++i) {
            rot(i, 0) = c * bank(i, 0) - s * bank(i, 1);
            rot(i, 1) = s * bank(i, 0) + c * bank(i, 1);
        }
        Vector qr{c * q[0] - s * q[1], s * q[0] + c * q[1]};
        CHECK(knn_distance(qr, rot, 5) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("select_boundary: examples") {
    auto sel = select_boundary(kTriangle, 1, 1);
    REQUIRE(sel.indices.size() == 1);
    CHECK(sel.indices[0] == 2);
    CHECK(sel.distances[0] == 4.0);
    for (std::size_t k = 1; k <= 2; ++k) CHECK(select_boundary(kTriangle, k, 3).indices.size() == 3);
    Matrix same(5, 3, 0.25);
    auto ties = select_boundary(same, 2, 5);
    CHECK(ties.indices == std::vector<std::size_t>{0, 1, 2, 3, 4});
    for (double d : ties.distances) CHECK(d == 0.0);
    CHECK_THROWS_AS(select_boundary(kTriangle, 1, 4), std::out_of_range);
    CHECK_THROWS_AS(select_boundary(kTriangle, 3, 1), std::out_of_range);
}

TEST_CASE("select_boundary and filter_top_knn agree with brute force on random and tied banks") {
    RngStream rng(1234, "knn-bruteforce");
    for (int trial = 0; trial < 40; ++trial) {
        CAPTURE(trial);
        const std::size_t n = 2 + rng.index(80);
        const std::size_t d = 1 + rng.index(6);
        Matrix bank(n, d);
        if (trial % 2 == 0) {
            for (double& v : bank.values()) v = rng.normal();
        } else {
            for (double& v : bank.values()) v = static_cast<double>(static_cast<int>(rng.index(3)) - 1);
        }
        const std::size_t k = 1 + rng.index(n - 1);
        const std::size_t top = 1 + rng.index(n);
        CHECK(select_boundary(bank, k, top).indices == testing::bf_select_boundary(bank, k, top));
        Matrix cands(1 + rng.index(40), d);
        for (double& v : cands.values()) v = trial % 2 == 0 ? 2.0 * rng.normal() : static_cast<double>(rng.index(4));
        const std::size_t kk = 1 + rng.index(n);
        const std::size_t l = 1 + rng.index(cands.rows());
        CHECK(filter_top_knn(cands, bank, kk, l).indices == testing::bf_filter(cands, bank, kk, l));
    }
}

TEST_CASE("filter_top_knn: examples") {
    Matrix bank{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    Matrix cands{{0.5, 0.5}, {0.4, 0.6}, {9.0, 9.0}, {0.6, 0.5}};
    auto far = filter_top_knn(cands, bank, 1, 1);
    CHECK(far.indices == std::vector<std::size_t>{2});
    CHECK(filter_top_knn(cands, bank, 2, 4).indices.size() == 4);
    Matrix dup{{3, 3}, {3, 3}, {3, 3}};
    CHECK(filter_top_knn(dup, bank, 1, 2).indices == std::vector<std::size_t>{0, 1});
    CHECK_THROWS_AS(filter_top_knn(dup, bank, 1, 4), std::out_of_range);
}

TEST_CASE("scale_center") {
    Vector z{1.0, 2.0};
    CHECK(scale_center(z, 1.0) == z);
    CHECK(scale_center(z, 2.0) == Vector{2.0, 4.0});
    Vector unit{0.6, 0.8};
    CHECK(l2_norm(scale_center(unit, 3.5)) == doctest::Approx(3.5).epsilon(1e-15));
    CHECK_THROWS_AS(scale_center(z, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(scale_center(z, -1.0), std::invalid_argument);
}

TEST_CASE("sample_kernel: degenerate and statistical behaviour") {
    RngStream rng(5, "kernel");
    Vector c{0.5, -1.0, 2.0};
    Matrix zero = sample_kernel(c, 0.0, 7, rng);
    for (std::size_t i = 0; i < 7; ++i) CHECK(Vector(zero.row(i).begin(), zero.row(i).end()) == c);

    const std::size_t m = 10000;
    Matrix s = sample_kernel(c, 1.0, m, rng);
    for (std::size_t j = 0; j < c.size(); ++j) {
        double mean = 0.0, var = 0.0;
        for (std::size_t i = 0; i < m; ++i) mean += s(i, j) / m;
        for (std::size_t i = 0; i < m; ++i) var += (s(i, j) - mean) * (s(i, j) - mean) / (m - 1);
        CHECK(std::abs(mean - c[j]) < 0.05);
        CHECK(std::abs(var - 1.0) < 0.05);
    }
    CHECK_THROWS_AS(sample_kernel(c, -0.1, 3, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_kernel(c, 0.1, 0, rng), std::invalid_argument);
}

TEST_CASE("synthesize_outliers equals the hand composition of the four stages") {
    RngStream rng(77, "synth-compose");
    Matrix raw = random_bank(rng, 10, 3);
    std::vector<std::size_t> labels{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    auto bank = NormalizedFeatureBank::from_raw(raw, labels, 2);
    for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(l2_norm(bank.z.row(i)) - 1.0) < 1e-9);
    Vector norms{1.3, 0.7};
    SynthConfig cfg{2, 2, 0.1, 5, 3};
    RngStream seed_rng(9, "synth");
    OutlierBank out = synthesize_outliers(bank, norms, cfg, seed_rng);

    Matrix expected(6, 3);
    std::size_t row = 0;
    for (std::size_t c = 0; c < 2; ++c) {
        auto rows = bank.class_indices(c);
        auto sel = testing::bf_select_boundary(gather_rows(bank.z, rows), 2, 2);
        RngStream crng = seed_rng.child("class", c);
        Matrix pool(10, 3);
        for (std::size_t i = 0; i < sel.size(); ++i) {
            Vector centre = scale_center(bank.z.row(rows[sel[i]]), norms[c]);
            Matrix draws = sample_kernel(centre, 0.1, 5, crng);
            for (std::size_t r = 0; r < 5; ++r)
                for (std::size_t j = 0; j < 3; ++j) pool(i * 5 + r, j) = draws(r, j);
        }
        for (std::size_t i : testing::bf_filter(pool, bank.z, 2, 3)) {
            for (std::size_t j = 0; j < 3; ++j) expected(row, j) = pool(i, j);
            ++row;
        }
    }
    CHECK(out.embeddings == expected);
    CHECK(out.embedding_classes == std::vector<std::size_t>{0, 0, 0, 1, 1, 1});
    CHECK(synthesize_outliers(bank, norms, cfg, seed_rng).embeddings == out.embeddings);
}

TEST_CASE("synthesize_outliers: kept outliers are at least as far as every rejected candidate") {
    RngStream rng(3, "synth-invariant");
    Matrix raw = random_bank(rng, 60, 4);
    std::vector<std::size_t> labels(60);
    for (std::size_t i = 0; i < 60; ++i) labels[i] = i % 3;
    auto bank = NormalizedFeatureBank::from_raw(raw, labels, 3);
    SynthConfig cfg{3, 4, 0.2, 10, 7};
    Vector norms{1.0, 1.1, 0.9};
    RngStream srng(4, "s");
    OutlierBank out = synthesize_outliers(bank, norms, cfg, srng);
    CHECK(out.embeddings.rows() == 21);
    // Rebuild class 0's candidate pool and compare against the brute-force k-NN distances.
    auto rows = bank.class_indices(0);
    auto sel = select_boundary(gather_rows(bank.z, rows), 3, 4);
    RngStream crng = srng.child("class", 0);
    std::vector<double> pool_d;
    for (std::size_t i : sel.indices) {
        Matrix draws = sample_kernel(scale_center(bank.z.row(rows[i]), 1.0), 0.2, 10, crng);
        for (std::size_t r = 0; r < 10; ++r) pool_d.push_back(testing::bf_knn(draws, r, bank.z, 3, std::nullopt));
    }
    std::sort(pool_d.begin(), pool_d.end(), std::greater<>());
    const double threshold = pool_d[6];
    Matrix kept = out.class_embeddings(0);
    for (std::size_t i = 0; i < kept.rows(); ++i)
        CHECK(testing::bf_knn(kept, i, bank.z, 3, std::nullopt) >= threshold - 1e-12);
}

TEST_CASE("synthesize_outliers: parameter validation") {
    RngStream rng(3, "synth-validate");
    auto bank = NormalizedFeatureBank::from_raw(random_bank(rng, 6, 2), {0, 0, 0, 1, 1, 1}, 2);
    Vector norms{1.0, 1.0};
    CHECK_THROWS(synthesize_outliers(bank, norms, SynthConfig{3, 2, 0.1, 4, 2}, rng));   // k too large for class
    CHECK_THROWS(synthesize_outliers(bank, norms, SynthConfig{1, 4, 0.1, 4, 2}, rng));   // top > class size
    CHECK_THROWS(synthesize_outliers(bank, norms, SynthConfig{1, 2, 0.1, 4, 9}, rng));   // keep > pool
    CHECK_THROWS(synthesize_outliers(bank, Vector{1.0}, SynthConfig{1, 2, 0.1, 4, 2}, rng));
    CHECK_THROWS(NormalizedFeatureBank::from_raw(Matrix(2, 2), {0, 0}, 1));
}

TEST_CASE("mean_reduce examples and linearity") {
    LatentBlock constant{{2, 2, 3}, 0, std::vector<double>(12, 5.0)};
    CHECK(mean_reduce(constant) == Vector{5.0, 5.0, 5.0});
    LatentBlock hand{{2, 2, 3}, 0, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}};
    CHECK(mean_reduce(hand) == Vector{5.5, 6.5, 7.5});
    LatentBlock single{{1, 1, 4}, 0, {1.5, -2.0, 3.25, 0.0}};
    CHECK(mean_reduce(single) == single.data);

    RngStream rng(8, "linearity");
    for (int t = 0; t < 50; ++t) {
        LatentBlock a{{3, 2, 4}, 0, {}}, b{{3, 2, 4}, 0, {}}, mix{{3, 2, 4}, 0, {}};
        const double x = rng.uniform(-2, 2), y = rng.uniform(-2, 2);
        for (std::size_t i = 0; i < 24; ++i) {
            a.data.push_back(rng.normal());
            b.data.push_back(rng.normal());
            mix.data.push_back(x * a.data.back() + y * b.data.back());
        }
        auto ma = mean_reduce(a), mb = mean_reduce(b), mm = mean_reduce(mix);
        for (std::size_t j = 0; j < 4; ++j) CHECK(mm[j] == doctest::Approx(x * ma[j] + y * mb[j]).epsilon(1e-12));
    }
}

TEST_CASE("mock generator: zero noise, shape contract, and mean recovery") {
    RngStream rng(10, "gen");
    LatentShape shape{4, 8, 16};
    MockLatentGenerator zero(6, shape, 0.0, rng);
    Vector v{0.3, -0.2, 0.9, 1.1, -0.5, 0.05};
    RngStream noise = rng.child("n");
    LatentBlock b = zero.generate(v, 2, noise);
    CHECK(b.data.size() == 4 * 8 * 16);
    CHECK(b.shape == shape);
    Vector pv = zero.project(v);
    for (std::size_t r = 0; r < 32; ++r)
        for (std::size_t j = 0; j < 16; ++j) CHECK(b.data[r * 16 + j] == pv[j]);

    const double tau = 0.25;
    MockLatentGenerator gen(6, shape, tau, rng);
    Vector acc(16, 0.0);
    for (int i = 0; i < 1000; ++i) {
        Vector f = mean_reduce(gen.generate(v, 0, noise));
        for (std::size_t j = 0; j < 16; ++j) acc[j] += f[j] / 1000.0;
    }
    Vector target = gen.project(v);
    const double tol = 3.0 * tau / std::sqrt(1000.0 * 4 * 8);
    for (std::size_t j = 0; j < 16; ++j) CHECK(std::abs(acc[j] - target[j]) < tol);
    CHECK_THROWS_AS(MockLatentGenerator(6, LatentShape{0, 8, 16}, 0.1, rng), std::invalid_argument);
}

TEST_CASE("generate_latents: class-balanced and deterministic") {
    RngStream rng(12, "gl");
    Matrix guidance = random_bank(rng, 9, 5);
    std::vector<std::size_t> cls{0, 0, 0, 1, 1, 1, 2, 2, 2};
    LatentGenConfig cfg;
    cfg.count = 30;
    auto a = generate_latents(guidance, cls, 3, cfg, RngStream(1, "x"));
    auto b = generate_latents(guidance, cls, 3, cfg, RngStream(1, "x"));
    REQUIRE(a.size() == 30);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].guidance_class == static_cast<long>(i % 3));
        CHECK(a[i].data == b[i].data);
    }
}

TEST_CASE("latent files: round trip, length mismatch, empty file") {
    fs::path dir = fs::temp_directory_path() / "oal_test_latents";
    fs::create_directories(dir);
    RngStream rng(2, "io");
    std::vector<LatentBlock> blocks;
    for (int i = 0; i < 3; ++i) {
        LatentBlock b{{2, 3, 4}, i, {}};
        for (int k = 0; k < 24; ++k) b.data.push_back(rng.normal() * 1e-7);
        blocks.push_back(b);
    }
    save_latents(blocks, dir / "rt.jsonl", ArtifactMeta{"latents", "h", 1, false});
    std::optional<ArtifactMeta> meta;
    auto back = load_latents(dir / "rt.jsonl", &meta);
    REQUIRE(back.size() == 3);
    REQUIRE(meta.has_value());
    for (int i = 0; i < 3; ++i) {
        CHECK(back[i].data == blocks[i].data);
        CHECK(back[i].shape == blocks[i].shape);
        CHECK(back[i].guidance_class == i);
    }
    {
        std::ofstream out(dir / "bad.jsonl");
        out << R"({"shape": [2, 2, 2], "guidance_class": 0, "data": [1, 2, 3]})" << '\n';
    }
    CHECK_THROWS_AS(load_latents(dir / "bad.jsonl"), std::runtime_error);
    { std::ofstream out(dir / "empty.jsonl"); }
    CHECK(load_latents(dir / "empty.jsonl").empty());
}
