#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace oal {

// Joint pmf p(u, f) over a rows x cols grid (u indexes rows, f indexes columns).
class DiscreteJoint {
public:
    DiscreteJoint(std::size_t rows, std::size_t cols, std::vector<double> p, bool smoothing = true,
                  double epsilon = 1e-9);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double operator()(std::size_t u, std::size_t f) const { return p_[u * cols_ + f]; }
    double marginal_u(std::size_t u) const { return pu_[u]; }
    double marginal_f(std::size_t f) const { return pf_[f]; }
    bool has_zero_cell() const;
    bool smoothed() const { return smoothed_; }

private:
    std::size_t rows_, cols_;
    std::vector<double> p_, pu_, pf_;
    bool smoothed_ = false;
};

double discrete_mi(const DiscreteJoint& j);
// sum p(u,f) log p(f|u) - sum p(u)p(f) log p(f|u); infinite support mismatch throws.
double discrete_club(const DiscreteJoint& j);
// CLUB minus MI computed from the two definitions.
double club_gap(const DiscreteJoint& j);
// The same gap as KL(p(u)p(f) || p(u,f)).
double club_gap_kl(const DiscreteJoint& j);

// JSONL: one {"rows":r,"cols":c,"p":[...]} per line.
std::vector<DiscreteJoint> load_joints(const std::string& path, bool smoothing = true);

}  // namespace oal
