#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "oal/core/autodiff.hpp"
#include "oal/core/mlp.hpp"

namespace oal {

inline constexpr double kLogVarMin = -8.0;
inline constexpr double kLogVarMax = 8.0;

// phi_theta: R^D -> R^d (k-NN outliers) or phi'_theta: R^w -> R^d (latent outliers).
class AlignmentNet {
public:
    AlignmentNet() = default;
    AlignmentNet(std::size_t in_width, std::size_t out_width, std::size_t hidden, const RngStream& rng,
                 const std::string& name = "align");
    explicit AlignmentNet(Mlp net) : net_(std::move(net)) {}

    Var align(Tape& tape, Var v, bool trainable = true) { return net_.forward(tape, v, trainable); }
    Vector align(std::span<const double> v) const { return net_.forward(v); }
    Matrix align(const Matrix& v) const { return net_.forward(v); }

    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }
    std::size_t output_width() const { return net_.output_width(); }

private:
    Mlp net_;
};

// Diagonal Gaussian q(f | u) = N(mu(u), diag(exp(s(u)))) with s clamped to [-8, 8].
class VariationalConditional {
public:
    VariationalConditional() = default;
    VariationalConditional(std::size_t cond_width, std::size_t target_width, std::size_t hidden, const RngStream& rng,
                           const std::string& name = "q");
    // Explicit mean and log-variance networks (both cond_width -> target_width).
    VariationalConditional(Mlp mean_net, Mlp logvar_net);

    // Graph-recorded (mu, s) for a batch of conditioning rows.
    std::pair<Var, Var> forward(Tape& tape, Var u, bool trainable);
    Matrix mean(const Matrix& u) const;
    Matrix log_variance(const Matrix& u) const;

    std::vector<Parameter*> parameters();
    Mlp& mean_net() { return mean_net_; }
    Mlp& logvar_net() { return logvar_net_; }
    const Mlp& mean_net() const { return mean_net_; }
    const Mlp& logvar_net() const { return logvar_net_; }
    std::size_t target_width() const { return mean_net_.output_width(); }
    std::size_t cond_width() const { return mean_net_.input_width(); }

private:
    Mlp mean_net_;
    Mlp logvar_net_;
};

// log q(f | u) for single vectors.
double log_cond_density(const VariationalConditional& q, std::span<const double> f, std::span<const double> u);

namespace ad {

// Per-row diagonal Gaussian log-density: n x 1.
Var gaussian_log_density_rows(Var f, Var mu, Var logvar);

// Sampled CLUB estimate for paired rows (f_i, mu_i, s_i):
//   (1/N) sum_i log q(f_i|u_i) - (1/N^2) sum_i sum_j log q(f_j|u_i)
// evaluated in O(N d) with an analytic backward.
Var club_estimate(Var f, Var mu, Var logvar);

}  // namespace ad

// Sampled estimator from a full table L(i, j) = log q(f_j | u_i):
//   (1/N) sum_i L(i, i) - (1/N^2) sum_ij L(i, j).
double club_from_log_density(const Matrix& log_q);

// I-hat for a batch with q frozen; differentiable w.r.t. f and u. Requires N >= 2.
Var micl_loss(Tape& tape, Var f, Var u, VariationalConditional& q);

struct FitResult {
    double initial_log_likelihood = 0.0;  // mean log q(f_i|u_i) before the first step
    double final_log_likelihood = 0.0;    // after the last step
};

// `steps` SGD steps maximizing mean log q(f_i | u_i) over q's parameters only.
// Throws std::invalid_argument for steps == 0 and NumericError on divergence.
FitResult fit_variational(VariationalConditional& q, const Matrix& f, const Matrix& u, std::size_t steps, double lr);

double mean_log_likelihood(const VariationalConditional& q, const Matrix& f, const Matrix& u);

}  // namespace oal
