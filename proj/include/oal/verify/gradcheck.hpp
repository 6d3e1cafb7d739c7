#pragma once

// Central finite-difference oracle for tape-built losses.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "oal/core/autodiff.hpp"

namespace oal::verify {

struct GradCheckResult {
    double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-8)
    double max_abs_diff = 0.0;
    double analytic_norm = 0.0;
    std::size_t coordinates = 0;
};

// `build` must construct the scalar loss on the given tape from the current
// parameter values. Every parameter in `params` is perturbed coordinate-wise.
// A nonzero `fault` is added to the first analytic coordinate (negative control).
inline GradCheckResult grad_check(const std::function<Var(Tape&)>& build, const std::vector<Parameter*>& params,
                                  double h = 1e-5, double fault = 0.0) {
    for (Parameter* p : params) p->zero_grad();
    {
        Tape tape;
        Var loss = build(tape);
        tape.backward(loss);
    }
    std::vector<double> analytic, numeric;
    for (Parameter* p : params) {
        for (std::size_t k = 0; k < p->value.size(); ++k) {
            analytic.push_back(p->grad.data()[k]);
            const double orig = p->value.data()[k];
            p->value.data()[k] = orig + h;
            double plus, minus;
            {
                Tape t;
                plus = build(t).scalar();
            }
            p->value.data()[k] = orig - h;
            {
                Tape t;
                minus = build(t).scalar();
            }
            p->value.data()[k] = orig;
            numeric.push_back((plus - minus) / (2.0 * h));
        }
    }
    if (!analytic.empty()) analytic[0] += fault;
    GradCheckResult r;
    r.coordinates = analytic.size();
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double d = analytic[i] - numeric[i];
        diff2 += d * d;
        a2 += analytic[i] * analytic[i];
        n2 += numeric[i] * numeric[i];
        r.max_abs_diff = std::max(r.max_abs_diff, std::abs(d));
    }
    r.analytic_norm = std::sqrt(a2);
    r.relative_error = std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(n2), 1e-8});
    return r;
}

}  // namespace oal::verify
