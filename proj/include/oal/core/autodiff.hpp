#pragma once

// Reverse-mode automatic differentiation over matrix-valued nodes.
//
// A Tape records every operation of one forward pass. backward() walks the
// tape once in reverse creation order (a valid topological order) and only
// visits nodes that lie on a path to the loss; all other gradients stay zero.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "oal/core/matrix.hpp"

namespace oal {

// Trainable tensor with a gradient accumulator.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}
    void zero_grad() { grad = Matrix(value.rows(), value.cols()); }
};

class Tape;

// Handle to a node on a Tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Matrix& value() const;
    const Matrix& grad() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    double scalar() const;
};

class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    // Leaf whose gradient is added into p.grad by backward().
    Var param(Parameter& p);
    // Leaf whose gradient is kept on the tape (read it with grad()).
    Var input(Matrix value);

    Var push(const char* op, Matrix value, std::vector<std::size_t> parents, BackwardFn backward);

    const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }
    // False for constants and for nodes computed only from constants.
    bool needs_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
    const Matrix& grad(std::size_t id) const;
    // Gradient buffer of a parent, allocated on first use. Used by op backward functions.
    Matrix& grad_for_update(std::size_t id);
    const Matrix& upstream(std::size_t self) const { return nodes_[self].grad; }

    // Requires a 1x1 loss. Throws NumericError on a non-finite gradient.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        const char* op = "";
        Matrix value;
        Matrix grad;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        Parameter* param = nullptr;
        bool reached = false;
        bool requires_grad = true;
    };
    std::vector<Node> nodes_;
    Matrix empty_;
};

namespace ad {

Var matmul(Var a, Var b);
Var add_row(Var a, Var row);  // row is 1 x cols(a)
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
Var tanh(Var a);
Var relu(Var a);
Var exp(Var a);
Var square(Var a);
Var log_floor(Var a, double floor);
Var clamp(Var a, double lo, double hi);
Var log_softmax_rows(Var a);
Var softmax_rows(Var a);
Var sum(Var a);                    // 1 x 1
Var mean(Var a);                   // 1 x 1
Var row_sums(Var a);               // n x 1
// Mean over rows of -log softmax(logits)[label].
Var cross_entropy(Var logits, std::span<const std::size_t> labels);
// Mean over rows of KL(exp(logp) || exp(logq)) for row-wise log-probabilities.
Var kl_rows(Var logp, Var logq);

}  // namespace ad
}  // namespace oal
