#include "oal/verify/oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "oal/core/numeric.hpp"
#include "oal/core/rng.hpp"
#include "oal/eval/scoring.hpp"
#include "oal/idkd/idkd.hpp"
#include "oal/micl/discrete.hpp"
#include "oal/micl/micl.hpp"
#include "oal/synth/outlier_synth.hpp"
#include "oal/train/trainer.hpp"
#include "oal/verify/brute_force.hpp"
#include "oal/verify/gradcheck.hpp"

namespace oal::verify {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct BruteJoint {
    double mi = 0.0, club = 0.0, kl = 0.0;
};

// Straight from the definitions over the full grid.
BruteJoint brute_joint(const DiscreteJoint& j) {
    BruteJoint b;
    for (std::size_t u = 0; u < j.rows(); ++u)
        for (std::size_t f = 0; f < j.cols(); ++f) {
            const double p = j(u, f), pu = j.marginal_u(u), pf = j.marginal_f(f);
            const double cond = std::log(p / pu);
            b.mi += p * std::log(p / (pu * pf));
            b.club += p * cond - pu * pf * cond;
            b.kl += pu * pf * std::log(pu * pf / p);
        }
    return b;
}

std::vector<double> normalized(std::vector<double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    for (double& x : v) x /= s;
    return v;
}

Matrix random_matrix(std::size_t r, std::size_t c, RngStream& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (double& v : m.values()) v = scale * rng.normal();
    return m;
}

Mlp linear(const Matrix& w, const Matrix& b) {
    return Mlp(MlpSpec{{w.rows(), w.cols()}, {Activation::Identity}}, {w}, {b});
}

}  // namespace

OracleResult check_club_identity(std::uint64_t seed, std::size_t random_joints, std::size_t factorized_joints) {
    const auto t0 = Clock::now();
    OracleResult r{"club-identity", true, "", 0.0};
    RngStream rng(seed, "club-identity");
    double worst_identity = 0.0, worst_defs = 0.0, min_gap = 1e300, worst_product = 0.0;
    for (std::size_t t = 0; t < random_joints; ++t) {
        const std::size_t rows = 2 + rng.index(5), cols = 2 + rng.index(5);
        std::vector<double> p(rows * cols);
        // Mix of mild and peaked joints, all strictly positive.
        const double spread = 0.5 + 3.0 * rng.uniform();
        for (double& v : p) v = std::exp(spread * rng.normal());
        DiscreteJoint j(rows, cols, normalized(std::move(p)));
        const BruteJoint b = brute_joint(j);
        const double mi = discrete_mi(j), club = discrete_club(j);
        const double gap = club - mi;
        worst_identity = std::max(worst_identity, std::abs(gap - b.kl));
        worst_defs = std::max({worst_defs, std::abs(mi - b.mi), std::abs(club - b.club)});
        min_gap = std::min(min_gap, gap);
    }
    for (std::size_t t = 0; t < factorized_joints; ++t) {
        const std::size_t rows = 1 + rng.index(6), cols = 1 + rng.index(6);
        std::vector<double> pu(rows), pf(cols);
        for (double& v : pu) v = 0.05 + rng.uniform();
        for (double& v : pf) v = 0.05 + rng.uniform();
        pu = normalized(std::move(pu));
        pf = normalized(std::move(pf));
        std::vector<double> p(rows * cols);
        for (std::size_t u = 0; u < rows; ++u)
            for (std::size_t f = 0; f < cols; ++f) p[u * cols + f] = pu[u] * pf[f];
        DiscreteJoint j(rows, cols, std::move(p));
        worst_product = std::max(worst_product, std::abs(discrete_club(j) - discrete_mi(j)));
    }
    r.passed = worst_identity < 1e-12 && worst_defs < 1e-12 && min_gap >= 0.0 && worst_product < 1e-12;
    r.detail = "max|gap-KL| " + fmt("%.2e", worst_identity) + ", min gap " + fmt("%.2e", min_gap) +
               ", max|gap| factorized " + fmt("%.2e", worst_product);
    r.seconds = seconds_since(t0);
    return r;
}

OracleResult check_gradients(std::uint64_t seed, std::size_t configs, double fault) {
    const auto t0 = Clock::now();
    const char* names[] = {"ce", "logit_kd", "feature_kd", "micl1", "micl2", "total"};
    double worst[6] = {};
    RngStream root(seed, "gradients");
    for (std::size_t c = 0; c < configs; ++c) {
        RngStream rng = root.child("config", c);
        const std::size_t classes = 2 + rng.index(3), in = 2 + rng.index(4), hidden = 2 + rng.index(4);
        const std::size_t teacher_w = 2 + rng.index(5), latent_w = 2 + rng.index(4), n = 2 + rng.index(4);
        TrainConfig cfg;
        cfg.feature_width = 2 + rng.index(3);
        cfg.phi_hidden = 3 + rng.index(3);
        cfg.align_hidden = 3 + rng.index(3);
        cfg.q_hidden = 3 + rng.index(3);
        cfg.kd_direction = c % 2 ? KdDirection::TeacherFirst : KdDirection::StudentFirst;
        StudentModel model({in, hidden, cfg.feature_width}, classes, rng.child("student"));
        OalNets nets = OalNets::create(cfg, teacher_w, latent_w, rng.child("nets"));

        TrainBatch b;
        b.x = random_matrix(n, in, rng);
        for (std::size_t i = 0; i < n; ++i) b.labels.push_back(rng.index(classes));
        b.teacher_features = random_matrix(n, teacher_w, rng);
        b.teacher_probs = Matrix(n, classes);
        for (std::size_t i = 0; i < n; ++i) {
            Vector logits(classes);
            for (double& v : logits) v = 2.0 * rng.normal();
            const Vector p = softmax(logits);
            for (std::size_t k = 0; k < classes; ++k) b.teacher_probs(i, k) = p[k];
        }
        b.outlier_embeddings = random_matrix(n, teacher_w, rng);
        b.outlier_latents = random_matrix(n, latent_w, rng);

        auto student = [&](Tape& t) { return model.forward(t, t.constant(b.x)); };
        std::vector<Parameter*> sp = model.parameters();
        auto with = [&](std::vector<Parameter*> extra) {
            std::vector<Parameter*> all = sp;
            all.insert(all.end(), extra.begin(), extra.end());
            return all;
        };
        const std::function<Var(Tape&)> builders[] = {
            [&](Tape& t) { return ad::cross_entropy(student(t).logits, b.labels); },
            [&](Tape& t) { return logit_kd_loss(t, student(t).logits, b.teacher_probs, cfg.kd_direction); },
            [&](Tape& t) {
                return feature_kd_loss(t, student(t).features, b.teacher_features, nets.phi, cfg.kd_direction);
            },
            [&](Tape& t) {
                Var u = nets.align.align(t, t.constant(b.outlier_embeddings));
                return micl_loss(t, student(t).features, u, nets.q1);
            },
            [&](Tape& t) {
                Var u = nets.align_latent.align(t, t.constant(b.outlier_latents));
                return micl_loss(t, student(t).features, u, nets.q2);
            },
            [&](Tape& t) { return total_loss(t, b, model, nets, cfg).total; },
        };
        const std::vector<Parameter*> params[] = {
            sp,
            sp,
            with(nets.phi.net().parameters()),
            with(nets.align.net().parameters()),
            with(nets.align_latent.net().parameters()),
            with(nets.trainable()),
        };
        for (std::size_t l = 0; l < 6; ++l) {
            const double f = (c == 0 && l == 5) ? fault : 0.0;
            worst[l] = std::max(worst[l], grad_check(builders[l], params[l], 1e-5, f).relative_error);
        }
    }
    OracleResult r{"gradients", true, "", 0.0};
    std::ostringstream os;
    for (std::size_t l = 0; l < 6; ++l) {
        if (!(worst[l] < 1e-4)) r.passed = false;
        os << (l ? ", " : "") << names[l] << ' ' << fmt("%.1e", worst[l]);
    }
    r.detail = "max rel err " + os.str();
    r.seconds = seconds_since(t0);
    return r;
}

OracleResult check_samplers(std::uint64_t seed, std::size_t banks, std::size_t max_rows, std::size_t max_dim) {
    const auto t0 = Clock::now();
    RngStream root(seed, "samplers");
    std::size_t boundary_bad = 0, filter_bad = 0;
    for (std::size_t t = 0; t < banks; ++t) {
        RngStream rng = root.child("bank", t);
        const bool ties = t % 2 == 1;
        const std::size_t n = 2 + rng.index(max_rows - 1), d = 1 + rng.index(max_dim);
        Matrix bank(n, d);
        for (double& v : bank.values()) v = ties ? static_cast<double>(static_cast<int>(rng.index(3)) - 1) : rng.normal();
        const std::size_t k = 1 + rng.index(std::min<std::size_t>(n - 1, 20));
        const std::size_t top = 1 + rng.index(n);
        if (select_boundary(bank, k, top).indices != bf_select_boundary(bank, k, top)) ++boundary_bad;

        Matrix cands(1 + rng.index(max_rows), d);
        for (double& v : cands.values()) v = ties ? static_cast<double>(rng.index(4)) : 2.0 * rng.normal();
        const std::size_t kk = 1 + rng.index(std::min<std::size_t>(n, 20));
        const std::size_t l = 1 + rng.index(cands.rows());
        if (filter_top_knn(cands, bank, kk, l).indices != bf_filter(cands, bank, kk, l)) ++filter_bad;
    }
    OracleResult r{"knn-samplers", boundary_bad == 0 && filter_bad == 0, "", 0.0};
    r.detail = std::to_string(banks) + " banks, mismatches: select_boundary " + std::to_string(boundary_bad) +
               ", filter_top_knn " + std::to_string(filter_bad);
    r.seconds = seconds_since(t0);
    return r;
}

OracleResult check_metrics(std::uint64_t seed, std::size_t sets) {
    const auto t0 = Clock::now();
    RngStream root(seed, "metrics");
    double worst_auroc = 0.0;
    std::size_t fpr_bad = 0;
    for (std::size_t t = 0; t < sets; ++t) {
        RngStream rng = root.child("set", t);
        const bool ties = t % 2 == 0;
        auto draw = [&](std::size_t m) {
            std::vector<double> v(m);
            for (double& x : v) x = ties ? static_cast<double>(rng.index(6)) : rng.normal() + 0.5 * rng.uniform();
            return v;
        };
        const auto id = draw(1 + rng.index(200)), ood = draw(1 + rng.index(200));
        worst_auroc = std::max(worst_auroc, std::abs(auroc(id, ood) - bf_auroc(id, ood)));
        if (fpr_at_95_tpr(id, ood) != bf_fpr95(id, ood)) ++fpr_bad;
    }
    const std::vector<double> hi{2.0, 3.0, 4.0, 5.0}, lo{-1.0, 0.0, 1.0};
    const bool perfect = auroc(hi, lo) == 1.0 && fpr_at_95_tpr(hi, lo) == 0.0;
    const bool identical = auroc(hi, hi) == 0.5 && auroc(lo, lo) == 0.5;
    OracleResult r{"metrics", worst_auroc < 1e-12 && fpr_bad == 0 && perfect && identical, "", 0.0};
    r.detail = std::to_string(sets) + " sets, max|auroc-bf| " + fmt("%.1e", worst_auroc) + ", fpr mismatches " +
               std::to_string(fpr_bad) + ", analytic " + (perfect && identical ? "exact" : "wrong");
    r.seconds = seconds_since(t0);
    return r;
}

OracleResult check_gaussian_mi(std::uint64_t seed, std::size_t draws, double rho) {
    const auto t0 = Clock::now();
    RngStream rng(seed, "gaussian-mi");
    const std::size_t n = draws;
    Matrix u(n, 1), f(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        u(i, 0) = rng.normal();
        f(i, 0) = rho * u(i, 0) + std::sqrt(1 - rho * rho) * rng.normal();
    }
    const double var = 1 - rho * rho;
    VariationalConditional q(linear(Matrix(1, 1, rho), Matrix(1, 1)), linear(Matrix(1, 1), Matrix(1, 1, std::log(var))));
    double est;
    {
        Tape tape;
        est = micl_loss(tape, tape.constant(f), tape.constant(u), q).scalar();
    }
    // Standard error from the per-sample contributions, written in closed form.
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) m1 += f(i, 0);
    m1 /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) m2 += (f(i, 0) - m1) * (f(i, 0) - m1);
    m2 /= static_cast<double>(n);
    std::vector<double> a(n);
    double mean_a = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double mu = rho * u(i, 0);
        a[i] = (m2 + (m1 - mu) * (m1 - mu) - (f(i, 0) - mu) * (f(i, 0) - mu)) / (2 * var);
        mean_a += a[i];
    }
    mean_a /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : a) ss += (v - mean_a) * (v - mean_a);
    const double se = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
    const double mi = -0.5 * std::log(1 - rho * rho);
    OracleResult r{"gaussian-mi", est >= mi - 2 * se, "", 0.0};
    r.detail = "estimate " + fmt("%.4f", est) + " vs I " + fmt("%.4f", mi) + " (se " + fmt("%.4f", se) + ")";
    r.seconds = seconds_since(t0);
    return r;
}

std::vector<OracleResult> run_oracle_suite(const SuiteOptions& opts) {
    return {check_club_identity(opts.seed), check_gradients(opts.seed, 100, opts.gradient_fault),
            check_samplers(opts.seed), check_metrics(opts.seed), check_gaussian_mi(opts.seed)};
}

std::string format_table(const std::vector<OracleResult>& results) {
    std::ostringstream os;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-16s %-6s %8s  %s\n", "oracle", "status", "seconds", "detail");
    os << buf;
    for (const auto& r : results) {
        std::snprintf(buf, sizeof buf, "%-16s %-6s %8.2f  ", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.seconds);
        os << buf << r.detail << '\n';
    }
    return os.str();
}

}  // namespace oal::verify
