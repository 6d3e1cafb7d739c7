#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace oal::verify {

struct OracleResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

// Discrete CLUB identity: on random strictly positive joints the gap between
// the bound and MI equals KL(p(u)p(f) || p(u,f)) and is nonnegative; on
// factorized joints it vanishes.
OracleResult check_club_identity(std::uint64_t seed, std::size_t random_joints = 1000,
                                 std::size_t factorized_joints = 100);

// Central finite differences against every training loss, per configuration.
// fault != 0 perturbs one analytic coordinate of the first configuration.
OracleResult check_gradients(std::uint64_t seed, std::size_t configs = 100, double fault = 0.0);

// select_boundary and filter_top_knn against O(n^2) brute force; every other
// bank has integer coordinates so that distances tie.
OracleResult check_samplers(std::uint64_t seed, std::size_t banks = 200, std::size_t max_rows = 500,
                            std::size_t max_dim = 16);

// auroc and fpr_at_95_tpr against pairwise and threshold-sweep definitions,
// plus the analytic perfect-separation and identical-distribution cases.
OracleResult check_metrics(std::uint64_t seed, std::size_t sets = 500);

// Sampled bound with the exact conditional of a bivariate Gaussian stays at or
// above the analytic MI, up to two standard errors.
OracleResult check_gaussian_mi(std::uint64_t seed, std::size_t draws = 10000, double rho = 0.8);

struct SuiteOptions {
    std::uint64_t seed = 0;
    double gradient_fault = 0.0;
};

std::vector<OracleResult> run_oracle_suite(const SuiteOptions& opts);

// Fixed-width pass/fail table, one row per result.
std::string format_table(const std::vector<OracleResult>& results);

}  // namespace oal::verify
