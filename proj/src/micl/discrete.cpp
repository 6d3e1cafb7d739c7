#include "oal/micl/discrete.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace oal {

DiscreteJoint::DiscreteJoint(std::size_t rows, std::size_t cols, std::vector<double> p, bool smoothing,
                             double epsilon)
    : rows_(rows), cols_(cols), p_(std::move(p)) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("discrete joint: empty grid");
    if (p_.size() != rows * cols) throw std::invalid_argument("discrete joint: expected rows*cols probabilities");
    double total = 0.0;
    for (double v : p_) {
        if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("discrete joint: probabilities must be >= 0");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("discrete joint: probabilities must sum to 1");
    if (smoothing && has_zero_cell()) {
        double z = 0.0;
        for (double& v : p_) z += (v += epsilon);
        for (double& v : p_) v /= z;
        smoothed_ = true;
    }
    pu_.assign(rows_, 0.0);
    pf_.assign(cols_, 0.0);
    for (std::size_t u = 0; u < rows_; ++u)
        for (std::size_t f = 0; f < cols_; ++f) {
            pu_[u] += (*this)(u, f);
            pf_[f] += (*this)(u, f);
        }
}

bool DiscreteJoint::has_zero_cell() const {
    for (double v : p_)
        if (v == 0.0) return true;
    return false;
}

double discrete_mi(const DiscreteJoint& j) {
    double mi = 0.0;
    for (std::size_t u = 0; u < j.rows(); ++u)
        for (std::size_t f = 0; f < j.cols(); ++f) {
            const double p = j(u, f);
            if (p > 0.0) mi += p * std::log(p / (j.marginal_u(u) * j.marginal_f(f)));
        }
    return mi;
}

double discrete_club(const DiscreteJoint& j) {
    double total = 0.0;
    for (std::size_t u = 0; u < j.rows(); ++u) {
        const double pu = j.marginal_u(u);
        if (pu == 0.0) continue;
        for (std::size_t f = 0; f < j.cols(); ++f) {
            const double p = j(u, f);
            const double w = p - pu * j.marginal_f(f);
            if (w == 0.0) continue;
            if (p == 0.0) throw std::domain_error("discrete_club: zero cell gives an unbounded estimate");
            total += w * std::log(p / pu);
        }
    }
    return total;
}

double club_gap(const DiscreteJoint& j) { return discrete_club(j) - discrete_mi(j); }

double club_gap_kl(const DiscreteJoint& j) {
    double kl = 0.0;
    for (std::size_t u = 0; u < j.rows(); ++u)
        for (std::size_t f = 0; f < j.cols(); ++f) {
            const double q = j.marginal_u(u) * j.marginal_f(f);
            if (q == 0.0) continue;
            const double p = j(u, f);
            if (p == 0.0) throw std::domain_error("club_gap_kl: zero cell gives an unbounded gap");
            kl += q * std::log(q / p);
        }
    return kl;
}

std::vector<DiscreteJoint> load_joints(const std::string& path, bool smoothing) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<DiscreteJoint> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            out.emplace_back(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                             j.at("p").get<std::vector<double>>(), smoothing);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace oal
