#include "oal/core/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oal/simd/kernels.hpp"

namespace oal {

const Matrix& Var::value() const { return tape->value(id); }
const Matrix& Var::grad() const { return tape->grad(id); }

double Var::scalar() const {
    const Matrix& v = value();
    if (v.rows() != 1 || v.cols() != 1) throw std::invalid_argument("scalar() on non-scalar node " + shape_string(v));
    return v(0, 0);
}

Var Tape::constant(Matrix value) {
    Var v = push("constant", std::move(value), {}, nullptr);
    nodes_[v.id].requires_grad = false;
    return v;
}

Var Tape::input(Matrix value) { return push("input", std::move(value), {}, nullptr); }

Var Tape::param(Parameter& p) {
    Var v = push("param", p.value, {}, nullptr);
    nodes_[v.id].param = &p;
    return v;
}

Var Tape::push(const char* op, Matrix value, std::vector<std::size_t> parents, BackwardFn backward) {
    if (!value.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
    Node n;
    n.op = op;
    n.value = std::move(value);
    n.parents = std::move(parents);
    n.backward = std::move(backward);
    if (!n.parents.empty()) {
        n.requires_grad = false;
        for (std::size_t p : n.parents) n.requires_grad = n.requires_grad || nodes_.at(p).requires_grad;
    }
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

const Matrix& Tape::grad(std::size_t id) const {
    const Node& n = nodes_.at(id);
    if (n.grad.empty() && !n.value.empty()) {
        // never reached: report zeros of the right shape
        const_cast<Node&>(n).grad = Matrix(n.value.rows(), n.value.cols());
    }
    return n.grad;
}

Matrix& Tape::grad_for_update(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.reached) {
        n.reached = true;
        n.grad = Matrix(n.value.rows(), n.value.cols());
    }
    return n.grad;
}

void Tape::backward(Var loss) {
    if (loss.tape != this) throw std::invalid_argument("loss belongs to a different tape");
    const Matrix& lv = nodes_[loss.id].value;
    if (lv.rows() != 1 || lv.cols() != 1) throw std::invalid_argument("backward requires a scalar loss, got " + shape_string(lv));
    for (Node& n : nodes_) {
        n.reached = false;
        n.grad = Matrix();
    }
    grad_for_update(loss.id)(0, 0) = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.reached || !n.requires_grad) continue;
        if (!n.grad.all_finite()) throw NumericError(std::string("non-finite gradient at ") + n.op);
        if (n.backward) n.backward(*this, i);
        if (n.param != nullptr) {
            Matrix& g = n.param->grad;
            if (g.rows() != n.grad.rows() || g.cols() != n.grad.cols()) g = Matrix(n.grad.rows(), n.grad.cols());
            for (std::size_t k = 0; k < g.size(); ++k) g.data()[k] += n.grad.data()[k];
        }
    }
}

namespace ad {
namespace {

Tape& tape_of(Var a, Var b) {
    if (a.tape != b.tape || a.tape == nullptr) throw std::invalid_argument("operands on different tapes");
    return *a.tape;
}

template <class F>
Matrix map(const Matrix& a, F f) {
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = f(a.data()[i]);
    return out;
}

}  // namespace

Var matmul(Var a, Var b) {
    Tape& t = tape_of(a, b);
    Matrix out = oal::matmul(a.value(), b.value());
    const std::size_t ia = a.id, ib = b.id;
    return t.push("matmul", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        const Matrix& av = tp.value(ia);
        const Matrix& bv = tp.value(ib);
        // dA = G * B^T
        if (tp.needs_grad(ia)) {
            Matrix& ga = tp.grad_for_update(ia);
            for (std::size_t i = 0; i < av.rows(); ++i)
                for (std::size_t p = 0; p < av.cols(); ++p) ga(i, p) += simd::dot(g.row(i).data(), bv.row(p).data(), g.cols());
        }
        // dB = A^T * G
        if (!tp.needs_grad(ib)) return;
        Matrix& gb = tp.grad_for_update(ib);
        for (std::size_t i = 0; i < av.rows(); ++i)
            for (std::size_t p = 0; p < av.cols(); ++p) {
                const double s = av(i, p);
                if (s != 0.0) simd::axpy(s, g.row(i).data(), gb.row(p).data(), g.cols());
            }
    });
}

Var add_row(Var a, Var row) {
    Tape& t = tape_of(a, row);
    Matrix out = a.value();
    add_row_inplace(out, row.value());
    const std::size_t ia = a.id, ir = row.id;
    return t.push("add_row", std::move(out), {ia, ir}, [ia, ir](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        Matrix& ga = tp.grad_for_update(ia);
        for (std::size_t k = 0; k < g.size(); ++k) ga.data()[k] += g.data()[k];
        Matrix& gr = tp.grad_for_update(ir);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
    });
}

Var add(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same_shape(a.value(), b.value(), "add");
    Matrix out = a.value();
    for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] += b.value().data()[k];
    const std::size_t ia = a.id, ib = b.id;
    return t.push("add", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        for (std::size_t id : {ia, ib}) {
            Matrix& gx = tp.grad_for_update(id);
            for (std::size_t k = 0; k < g.size(); ++k) gx.data()[k] += g.data()[k];
        }
    });
}

Var sub(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same_shape(a.value(), b.value(), "sub");
    Matrix out = a.value();
    for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] -= b.value().data()[k];
    const std::size_t ia = a.id, ib = b.id;
    return t.push("sub", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        Matrix& ga = tp.grad_for_update(ia);
        for (std::size_t k = 0; k < g.size(); ++k) ga.data()[k] += g.data()[k];
        Matrix& gb = tp.grad_for_update(ib);
        for (std::size_t k = 0; k < g.size(); ++k) gb.data()[k] -= g.data()[k];
    });
}

Var mul(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same_shape(a.value(), b.value(), "mul");
    Matrix out = a.value();
    for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] *= b.value().data()[k];
    const std::size_t ia = a.id, ib = b.id;
    return t.push("mul", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        const Matrix& av = tp.value(ia);
        const Matrix& bv = tp.value(ib);
        Matrix& ga = tp.grad_for_update(ia);
        for (std::size_t k = 0; k < g.size(); ++k) ga.data()[k] += g.data()[k] * bv.data()[k];
        Matrix& gb = tp.grad_for_update(ib);
        for (std::size_t k = 0; k < g.size(); ++k) gb.data()[k] += g.data()[k] * av.data()[k];
    });
}

Var scale(Var a, double s) {
    const std::size_t ia = a.id;
    return a.tape->push("scale", map(a.value(), [s](double x) { return s * x; }), {ia},
                        [ia, s](Tape& tp, std::size_t self) {
                            const Matrix& g = tp.upstream(self);
                            Matrix& ga = tp.grad_for_update(ia);
                            for (std::size_t k = 0; k < g.size(); ++k) ga.data()[k] += s * g.data()[k];
                        });
}

namespace {

// Unary op whose local derivative is a function of (input, output).
template <class Fwd, class Deriv>
Var unary(const char* name, Var a, Fwd fwd, Deriv deriv) {
    const std::size_t ia = a.id;
    return a.tape->push(name, map(a.value(), fwd), {ia}, [ia, deriv](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        const Matrix& x = tp.value(ia);
        const Matrix& y = tp.value(self);
        Matrix& ga = tp.grad_for_update(ia);
        for (std::size_t k = 0; k < g.size(); ++k) ga.data()[k] += g.data()[k] * deriv(x.data()[k], y.data()[k]);
    });
}

}  // namespace

Var tanh(Var a) {
    return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
    return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var a) {
    return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var square(Var a) {
    return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var log_floor(Var a, double floor) {
    return unary("log_floor", a, [floor](double x) { return std::log(std::max(x, floor)); },
                 [floor](double x, double) { return x > floor ? 1.0 / x : 0.0; });
}

Var clamp(Var a, double lo, double hi) {
    return unary("clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
                 [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var log_softmax_rows(Var a) {
    const Matrix& x = a.value();
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto r = x.row(i);
        const double m = *std::max_element(r.begin(), r.end());
        double s = 0.0;
        for (double v : r) s += std::exp(v - m);
        const double lse = m + std::log(s);
        for (std::size_t j = 0; j < r.size(); ++j) out(i, j) = r[j] - lse;
    }
    const std::size_t ia = a.id;
    return a.tape->push("log_softmax_rows", std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        const Matrix& y = tp.value(self);
        Matrix& ga = tp.grad_for_update(ia);
        for (std::size_t i = 0; i < g.rows(); ++i) {
            double gs = 0.0;
            for (std::size_t j = 0; j < g.cols(); ++j) gs += g(i, j);
            for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += g(i, j) - std::exp(y(i, j)) * gs;
        }
    });
}

Var softmax_rows(Var a) {
    const Matrix& x = a.value();
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto r = x.row(i);
        const double m = *std::max_element(r.begin(), r.end());
        double s = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) {
            out(i, j) = std::exp(r[j] - m);
            s += out(i, j);
        }
        for (std::size_t j = 0; j < r.size(); ++j) out(i, j) /= s;
    }
    const std::size_t ia = a.id;
    return a.tape->push("softmax_rows", std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        const Matrix& y = tp.value(self);
        Matrix& ga = tp.grad_for_update(ia);
        for (std::size_t i = 0; i < g.rows(); ++i) {
            double dotgy = 0.0;
            for (std::size_t j = 0; j < g.cols(); ++j) dotgy += g(i, j) * y(i, j);
            for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += y(i, j) * (g(i, j) - dotgy);
        }
    });
}

Var sum(Var a) {
    double s = 0.0;
    for (double v : a.value().values()) s += v;
    const std::size_t ia = a.id;
    return a.tape->push("sum", Matrix(1, 1, s), {ia}, [ia](Tape& tp, std::size_t self) {
        const double g = tp.upstream(self)(0, 0);
        Matrix& ga = tp.grad_for_update(ia);
        for (double& v : ga.values()) v += g;
    });
}

Var mean(Var a) {
    const double n = static_cast<double>(a.value().size());
    if (n == 0) throw std::invalid_argument("mean of empty node");
    double s = 0.0;
    for (double v : a.value().values()) s += v;
    const std::size_t ia = a.id;
    return a.tape->push("mean", Matrix(1, 1, s / n), {ia}, [ia, n](Tape& tp, std::size_t self) {
        const double g = tp.upstream(self)(0, 0) / n;
        Matrix& ga = tp.grad_for_update(ia);
        for (double& v : ga.values()) v += g;
    });
}

Var row_sums(Var a) {
    const Matrix& x = a.value();
    Matrix out(x.rows(), 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double s = 0.0;
        for (double v : x.row(i)) s += v;
        out(i, 0) = s;
    }
    const std::size_t ia = a.id;
    return a.tape->push("row_sums", std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        Matrix& ga = tp.grad_for_update(ia);
        for (std::size_t i = 0; i < ga.rows(); ++i)
            for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g(i, 0);
    });
}

Var cross_entropy(Var logits, std::span<const std::size_t> labels) {
    const Matrix& x = logits.value();
    if (labels.size() != x.rows()) throw std::invalid_argument("cross_entropy: label count does not match batch");
    if (x.rows() == 0) throw std::invalid_argument("cross_entropy: empty batch");
    std::vector<std::size_t> lab(labels.begin(), labels.end());
    Matrix probs(x.rows(), x.cols());
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        if (lab[i] >= x.cols()) {
            throw std::out_of_range("label " + std::to_string(lab[i]) + " out of range for " +
                                    std::to_string(x.cols()) + " classes");
        }
        auto r = x.row(i);
        const double m = *std::max_element(r.begin(), r.end());
        double s = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) {
            probs(i, j) = std::exp(r[j] - m);
            s += probs(i, j);
        }
        for (std::size_t j = 0; j < r.size(); ++j) probs(i, j) /= s;
        total += (m + std::log(s)) - r[lab[i]];
    }
    const double n = static_cast<double>(x.rows());
    const std::size_t il = logits.id;
    return logits.tape->push(
        "cross_entropy", Matrix(1, 1, total / n), {il},
        [il, lab = std::move(lab), probs = std::move(probs), n](Tape& tp, std::size_t self) {
            const double g = tp.upstream(self)(0, 0) / n;
            Matrix& gl = tp.grad_for_update(il);
            for (std::size_t i = 0; i < probs.rows(); ++i)
                for (std::size_t j = 0; j < probs.cols(); ++j)
                    gl(i, j) += g * (probs(i, j) - (j == lab[i] ? 1.0 : 0.0));
        });
}

Var kl_rows(Var logp, Var logq) {
    require_same_shape(logp.value(), logq.value(), "kl_rows");
    const double n = static_cast<double>(logp.rows());
    Var p = exp(logp);
    return scale(sum(mul(p, sub(logp, logq))), 1.0 / n);
}

}  // namespace ad
}  // namespace oal
