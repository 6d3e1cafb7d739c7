#include "oal/micl/micl.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oal {

namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
}

AlignmentNet::AlignmentNet(std::size_t in_width, std::size_t out_width, std::size_t hidden, const RngStream& rng,
                           const std::string& name)
    : net_(MlpSpec::tanh_hidden({in_width, hidden, out_width}), rng, name) {}

VariationalConditional::VariationalConditional(std::size_t cond_width, std::size_t target_width, std::size_t hidden,
                                               const RngStream& rng, const std::string& name)
    : mean_net_(MlpSpec::tanh_hidden({cond_width, hidden, target_width}), rng.child("mean"), name + ".mean"),
      logvar_net_(MlpSpec::tanh_hidden({cond_width, hidden, target_width}), rng.child("logvar"), name + ".logvar") {}

VariationalConditional::VariationalConditional(Mlp mean_net, Mlp logvar_net)
    : mean_net_(std::move(mean_net)), logvar_net_(std::move(logvar_net)) {
    if (mean_net_.input_width() != logvar_net_.input_width() ||
        mean_net_.output_width() != logvar_net_.output_width()) {
        throw std::invalid_argument("variational conditional: mean and log-variance nets disagree in shape");
    }
}

std::pair<Var, Var> VariationalConditional::forward(Tape& tape, Var u, bool trainable) {
    Var mu = mean_net_.forward(tape, u, trainable);
    Var s = ad::clamp(logvar_net_.forward(tape, u, trainable), kLogVarMin, kLogVarMax);
    return {mu, s};
}

Matrix VariationalConditional::mean(const Matrix& u) const { return mean_net_.forward(u); }

Matrix VariationalConditional::log_variance(const Matrix& u) const {
    Matrix s = logvar_net_.forward(u);
    for (double& v : s.values()) v = std::clamp(v, kLogVarMin, kLogVarMax);
    return s;
}

std::vector<Parameter*> VariationalConditional::parameters() {
    std::vector<Parameter*> out = mean_net_.parameters();
    for (Parameter* p : logvar_net_.parameters()) out.push_back(p);
    return out;
}

double log_cond_density(const VariationalConditional& q, std::span<const double> f, std::span<const double> u) {
    if (u.size() != q.cond_width() || f.size() != q.target_width()) {
        throw std::invalid_argument("log_cond_density: width mismatch");
    }
    const Matrix um = Matrix::row_vector(u);
    const Matrix mu = q.mean(um);
    const Matrix s = q.log_variance(um);
    double total = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double d = f[j] - mu(0, j);
        total += -kHalfLog2Pi - 0.5 * s(0, j) - d * d / (2.0 * std::exp(s(0, j)));
    }
    return total;
}

namespace ad {

Var gaussian_log_density_rows(Var f, Var mu, Var logvar) {
    require_same_shape(f.value(), mu.value(), "gaussian_log_density_rows");
    require_same_shape(f.value(), logvar.value(), "gaussian_log_density_rows");
    const Matrix& fv = f.value();
    const Matrix& mv = mu.value();
    const Matrix& sv = logvar.value();
    Matrix out(fv.rows(), 1);
    for (std::size_t i = 0; i < fv.rows(); ++i) {
        double t = 0.0;
        for (std::size_t k = 0; k < fv.cols(); ++k) {
            const double d = fv(i, k) - mv(i, k);
            t += -kHalfLog2Pi - 0.5 * sv(i, k) - 0.5 * d * d * std::exp(-sv(i, k));
        }
        out(i, 0) = t;
    }
    const std::size_t jf = f.id, jm = mu.id, js = logvar.id;
    return f.tape->push("gaussian_log_density_rows", std::move(out), {jf, jm, js},
                        [jf, jm, js](Tape& tp, std::size_t self) {
                            const Matrix& g = tp.upstream(self);
                            const Matrix& fv = tp.value(jf);
                            const Matrix& mv = tp.value(jm);
                            const Matrix& sv = tp.value(js);
                            Matrix& gf = tp.grad_for_update(jf);
                            Matrix& gm = tp.grad_for_update(jm);
                            Matrix& gs = tp.grad_for_update(js);
                            for (std::size_t i = 0; i < fv.rows(); ++i)
                                for (std::size_t k = 0; k < fv.cols(); ++k) {
                                    const double a = std::exp(-sv(i, k));
                                    const double d = fv(i, k) - mv(i, k);
                                    gf(i, k) += g(i, 0) * (-a * d);
                                    gm(i, k) += g(i, 0) * (a * d);
                                    gs(i, k) += g(i, 0) * (-0.5 + 0.5 * d * d * a);
                                }
                        });
}

// With a_ik = exp(-s_ik), m1_k = mean_j f_jk and v_k = mean_j (f_jk - m1_k)^2,
// the normalizing constants and the s terms cancel between the paired and the
// all-pairs sums, leaving
//   I-hat = (1/2N) sum_ik a_ik [v_k + (m1_k - mu_ik)^2 - (f_ik - mu_ik)^2].
Var club_estimate(Var f, Var mu, Var logvar) {
    require_same_shape(f.value(), mu.value(), "club_estimate");
    require_same_shape(f.value(), logvar.value(), "club_estimate");
    const Matrix& fv = f.value();
    const Matrix& mv = mu.value();
    const Matrix& sv = logvar.value();
    const std::size_t n = fv.rows(), d = fv.cols();
    if (n < 2) throw std::invalid_argument("club_estimate needs at least 2 paired samples");
    const double nn = static_cast<double>(n);

    Vector m1(d, 0.0), var(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) m1[k] += fv(i, k);
    for (double& v : m1) v /= nn;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) var[k] += (fv(i, k) - m1[k]) * (fv(i, k) - m1[k]);
    for (double& v : var) v /= nn;

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) {
            const double a = std::exp(-sv(i, k));
            const double dm = m1[k] - mv(i, k);
            const double df = fv(i, k) - mv(i, k);
            total += a * (var[k] + dm * dm - df * df);
        }
    total /= 2.0 * nn;

    const std::size_t jf = f.id, jm = mu.id, js = logvar.id;
    return f.tape->push(
        "club_estimate", Matrix(1, 1, total), {jf, jm, js},
        [jf, jm, js, m1 = std::move(m1), var = std::move(var)](Tape& tp, std::size_t self) {
            const double g = tp.upstream(self)(0, 0);
            const Matrix& fv = tp.value(jf);
            const Matrix& mv = tp.value(jm);
            const Matrix& sv = tp.value(js);
            const std::size_t n = fv.rows(), d = fv.cols();
            const double nn = static_cast<double>(n);
            Matrix& gf = tp.grad_for_update(jf);
            Matrix& gm = tp.grad_for_update(jm);
            Matrix& gs = tp.grad_for_update(js);
            Vector asum(d, 0.0), amu(d, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < d; ++k) {
                    const double a = std::exp(-sv(i, k));
                    asum[k] += a;
                    amu[k] += a * mv(i, k);
                    const double dm = m1[k] - mv(i, k);
                    const double df = fv(i, k) - mv(i, k);
                    gs(i, k) += g * (-a * (var[k] + dm * dm - df * df) / (2.0 * nn));
                    gm(i, k) += g * (a * (fv(i, k) - m1[k]) / nn);
                    gf(i, k) += g * (-a * df / nn);
                }
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < d; ++k) gf(j, k) += g * (fv(j, k) * asum[k] - amu[k]) / (nn * nn);
        });
}

}  // namespace ad

double club_from_log_density(const Matrix& log_q) {
    const std::size_t n = log_q.rows();
    if (n < 2 || log_q.cols() != n) throw std::invalid_argument("club_from_log_density: need a square table with N >= 2");
    double paired = 0.0, all = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        paired += log_q(i, i);
        for (std::size_t j = 0; j < n; ++j) all += log_q(i, j);
    }
    const double nn = static_cast<double>(n);
    return paired / nn - all / (nn * nn);
}

Var micl_loss(Tape& tape, Var f, Var u, VariationalConditional& q) {
    if (f.rows() != u.rows()) throw std::invalid_argument("micl_loss: batch sizes differ");
    if (f.rows() < 2) throw std::invalid_argument("micl_loss: need N >= 2");
    if (f.cols() != q.target_width() || u.cols() != q.cond_width()) throw std::invalid_argument("micl_loss: width mismatch");
    auto [mu, s] = q.forward(tape, u, false);
    return ad::club_estimate(f, mu, s);
}

double mean_log_likelihood(const VariationalConditional& q, const Matrix& f, const Matrix& u) {
    const Matrix mu = q.mean(u);
    const Matrix s = q.log_variance(u);
    double total = 0.0;
    for (std::size_t i = 0; i < f.rows(); ++i)
        for (std::size_t k = 0; k < f.cols(); ++k) {
            const double d = f(i, k) - mu(i, k);
            total += -kHalfLog2Pi - 0.5 * s(i, k) - 0.5 * d * d * std::exp(-s(i, k));
        }
    return total / static_cast<double>(f.rows());
}

FitResult fit_variational(VariationalConditional& q, const Matrix& f, const Matrix& u, std::size_t steps, double lr) {
    if (steps == 0) throw std::invalid_argument("fit_variational: steps must be >= 1");
    if (f.rows() != u.rows() || f.rows() == 0) throw std::invalid_argument("fit_variational: batch mismatch");
    FitResult r;
    std::vector<Parameter*> params = q.parameters();
    for (std::size_t step = 0; step < steps; ++step) {
        zero_grads(params);
        Tape tape;
        Var fv = tape.constant(f);
        auto [mu, s] = q.forward(tape, tape.constant(u), true);
        Var ll = ad::mean(ad::gaussian_log_density_rows(fv, mu, s));
        if (step == 0) r.initial_log_likelihood = ll.scalar();
        Var loss = ad::scale(ll, -1.0);
        try {
            tape.backward(loss);
        } catch (const NumericError& e) {
            throw NumericError(std::string("variational fit diverged: ") + e.what());
        }
        sgd_step(params, lr);
    }
    r.final_log_likelihood = mean_log_likelihood(q, f, u);
    if (!std::isfinite(r.final_log_likelihood)) throw NumericError("variational fit diverged: non-finite likelihood");
    return r;
}

}  // namespace oal
