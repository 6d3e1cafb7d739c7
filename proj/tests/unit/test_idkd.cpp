#include <cmath>

#include "../support/gradcheck.hpp"
#include "doctest.h"
#include "oal/core/numeric.hpp"
#include "oal/core/rng.hpp"
#include "oal/idkd/idkd.hpp"

using namespace oal;
using doctest::Approx;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, RngStream& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (double& v : m.values()) v = scale * rng.normal();
    return m;
}

Vector random_probs(std::size_t c, RngStream& rng) {
    Vector logits(c);
    for (double& v : logits) v = 2.0 * rng.normal();
    return softmax(logits);
}

}  // namespace

TEST_CASE("logit_kd_loss: matching distributions give zero") {
    Vector logits{0.3, -1.2, 2.0, 0.0};
    CHECK(logit_kd_loss(logits, softmax(logits)) == Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK(logit_kd_loss(logits, softmax(logits), KdDirection::TeacherFirst) == Approx(0.0).scale(1.0).epsilon(1e-15));
}

TEST_CASE("logit_kd_loss: [ln2, 0] against uniform") {
    const double v = logit_kd_loss(Vector{std::log(2.0), 0.0}, Vector{0.5, 0.5});
    const double expected = (2.0 / 3.0) * std::log(4.0 / 3.0) + (1.0 / 3.0) * std::log(2.0 / 3.0);
    CHECK(v == Approx(expected).epsilon(1e-14));
    CHECK(v == Approx(0.0566).epsilon(1e-3));
    // Teacher-first: 0.5 ln(0.5/(2/3)) + 0.5 ln(0.5/(1/3)).
    const double rev = logit_kd_loss(Vector{std::log(2.0), 0.0}, Vector{0.5, 0.5}, KdDirection::TeacherFirst);
    CHECK(rev == Approx(0.5 * std::log(0.75) + 0.5 * std::log(1.5)).epsilon(1e-14));
}

TEST_CASE("logit_kd_loss is non-negative over random pairs and shift invariant") {
    RngStream rng(31, "kd");
    for (int t = 0; t < 1000; ++t) {
        const std::size_t c = 2 + rng.index(9);
        Vector s(c);
        for (double& v : s) v = 3.0 * rng.normal();
        const Vector p = random_probs(c, rng);
        const double l = logit_kd_loss(s, p);
        CHECK(l >= 0.0);
        CHECK(logit_kd_loss(s, p, KdDirection::TeacherFirst) >= 0.0);
        Vector shifted = s;
        const double k = 10.0 * rng.normal();
        for (double& v : shifted) v += k;
        CHECK(logit_kd_loss(shifted, p) == Approx(l).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("logit_kd_loss: width mismatch throws") {
    CHECK_THROWS_AS(logit_kd_loss(Vector{1.0, 2.0}, Vector{1.0}), std::invalid_argument);
    Tape tape;
    CHECK_THROWS_AS(logit_kd_loss(tape, tape.constant(Matrix(2, 3)), Matrix(2, 2)), std::invalid_argument);
}

TEST_CASE("graph logit KD equals the row mean of the plain form") {
    RngStream rng(4);
    for (auto dir : {KdDirection::StudentFirst, KdDirection::TeacherFirst}) {
        Matrix s = random_matrix(6, 4, rng, 2.0);
        Matrix p(6, 4);
        for (std::size_t i = 0; i < 6; ++i) {
            const Vector r = random_probs(4, rng);
            std::copy(r.begin(), r.end(), p.row(i).begin());
        }
        double expected = 0.0;
        for (std::size_t i = 0; i < 6; ++i) expected += logit_kd_loss(s.row(i), p.row(i), dir);
        Tape tape;
        CHECK(logit_kd_loss(tape, tape.constant(s), p, dir).scalar() == Approx(expected / 6).epsilon(1e-12));
    }
}

TEST_CASE("logit KD gradient matches finite differences") {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        RngStream rng(seed, "lkd");
        const std::size_t n = 1 + rng.index(4), c = 2 + rng.index(5);
        Parameter s("s", random_matrix(n, c, rng, 2.0));
        Matrix p(n, c);
        for (std::size_t i = 0; i < n; ++i) {
            const Vector r = random_probs(c, rng);
            std::copy(r.begin(), r.end(), p.row(i).begin());
        }
        for (auto dir : {KdDirection::StudentFirst, KdDirection::TeacherFirst}) {
            auto r = testing::grad_check([&](Tape& t) { return logit_kd_loss(t, t.param(s), p, dir); }, {&s});
            worst = std::max(worst, r.relative_error);
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("feature_kd_loss: constructed phi reproducing f gives zero") {
    // phi(x) = x when D_T == d and the net is a single identity layer.
    DomainTransferNet phi(Mlp(MlpSpec{{3, 3}, {Activation::Identity}}, {Matrix::identity(3)}, {Matrix(1, 3)}));
    Vector f{0.2, -0.7, 1.1};
    CHECK(feature_kd_loss(f, f, phi) == Approx(0.0).scale(1.0).epsilon(1e-15));
}

TEST_CASE("feature_kd_loss: d=2 constant case matches kl_div") {
    // phi outputs a constant bias regardless of input.
    DomainTransferNet phi(Mlp(MlpSpec{{4, 2}, {Activation::Identity}}, {Matrix(4, 2)}, {Matrix{{0.5, -0.5}}}));
    Vector f{1.0, 1.0};
    Vector ft{3.0, -1.0, 0.0, 2.0};
    const double expected = kl_div(softmax(f), softmax(Vector{0.5, -0.5}));
    CHECK(feature_kd_loss(f, ft, phi) == Approx(expected).epsilon(1e-14));
    // Hand value: KL([1/2,1/2] || softmax([0.5,-0.5])).
    const double q0 = 1.0 / (1.0 + std::exp(-1.0));
    CHECK(expected == Approx(0.5 * std::log(0.5 / q0) + 0.5 * std::log(0.5 / (1 - q0))).epsilon(1e-14));
}

TEST_CASE("feature_kd_loss: width mismatch throws") {
    DomainTransferNet phi(6, 3, 32, RngStream(1));
    CHECK(phi.output_width() == 3);
    CHECK_THROWS_AS(feature_kd_loss(Vector{1.0, 2.0}, Vector(6, 0.0), phi), std::invalid_argument);
    CHECK_THROWS_AS(feature_kd_loss(Vector{1.0, 2.0, 3.0}, Vector(5, 0.0), phi), std::invalid_argument);
    Tape tape;
    CHECK_THROWS_AS(feature_kd_loss(tape, tape.constant(Matrix(2, 3)), Matrix(3, 6), phi), std::invalid_argument);
}

TEST_CASE("feature KD gradients through the student features and phi match finite differences") {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        RngStream rng(seed, "fkd");
        const std::size_t n = 1 + rng.index(4), d = 2 + rng.index(3), dt = d + 1 + rng.index(4);
        DomainTransferNet phi(dt, d, 5, rng.child("phi"));
        Parameter f("f", random_matrix(n, d, rng));
        Matrix ft = random_matrix(n, dt, rng);
        std::vector<Parameter*> params = phi.net().parameters();
        params.push_back(&f);
        for (auto dir : {KdDirection::StudentFirst, KdDirection::TeacherFirst}) {
            auto r = testing::grad_check([&](Tape& t) { return feature_kd_loss(t, t.param(f), ft, phi, dir); }, params);
            worst = std::max(worst, r.relative_error);
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("feature KD graph and plain forms agree; teacher inputs get no gradient") {
    RngStream rng(12);
    DomainTransferNet phi(8, 4, 32, rng.child("phi"));
    Matrix f = random_matrix(5, 4, rng), ft = random_matrix(5, 8, rng);
    double expected = 0.0;
    for (std::size_t i = 0; i < 5; ++i) expected += feature_kd_loss(f.row(i), ft.row(i), phi);
    Tape tape;
    Var loss = feature_kd_loss(tape, tape.input(f), ft, phi);
    CHECK(loss.scalar() == Approx(expected / 5).epsilon(1e-12));
    CHECK(loss.scalar() >= 0.0);
    tape.backward(loss);
    std::size_t teacher_nodes = 0;
    for (std::size_t id = 0; id < tape.size(); ++id) {
        if (!(tape.value(id) == ft)) continue;
        ++teacher_nodes;
        CHECK_FALSE(tape.needs_grad(id));
        for (double g : tape.grad(id).values()) CHECK(g == 0.0);
    }
    CHECK(teacher_nodes == 1);
}

TEST_CASE("kd direction parsing") {
    CHECK(parse_kd_direction("paper") == KdDirection::StudentFirst);
    CHECK(parse_kd_direction("reverse") == KdDirection::TeacherFirst);
    CHECK(to_string(KdDirection::TeacherFirst) == "reverse");
    CHECK_THROWS_AS(parse_kd_direction("sideways"), std::invalid_argument);
}
