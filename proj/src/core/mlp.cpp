#include "oal/core/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace oal {

const char* to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
    }
    return "identity";
}

Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::Identity;
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::Relu;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

MlpSpec MlpSpec::tanh_hidden(std::vector<std::size_t> widths, Activation out) {
    MlpSpec s;
    s.widths = std::move(widths);
    if (s.widths.size() < 2) throw std::invalid_argument("MLP needs at least an input and an output width");
    s.activations.assign(s.widths.size() - 1, Activation::Tanh);
    s.activations.back() = out;
    return s;
}

void MlpSpec::validate() const {
    if (widths.size() < 2) throw std::invalid_argument("MLP needs at least an input and an output width");
    if (activations.size() != widths.size() - 1) throw std::invalid_argument("MLP activation count must equal layer count");
    for (std::size_t w : widths)
        if (w == 0) throw std::invalid_argument("MLP widths must be positive");
}

Mlp::Mlp(MlpSpec spec, RngStream rng, const std::string& name) : spec_(std::move(spec)) {
    spec_.validate();
    for (std::size_t l = 0; l < spec_.layers(); ++l) {
        const std::size_t in = spec_.widths[l], out = spec_.widths[l + 1];
        const double a = std::sqrt(6.0 / static_cast<double>(in + out));
        Matrix w(in, out);
        for (double& v : w.values()) v = rng.uniform(-a, a);
        weights_.emplace_back(name + ".w" + std::to_string(l), std::move(w));
        biases_.emplace_back(name + ".b" + std::to_string(l), Matrix(1, out));
    }
}

Mlp::Mlp(MlpSpec spec, std::vector<Matrix> weights, std::vector<Matrix> biases, const std::string& name)
    : spec_(std::move(spec)) {
    spec_.validate();
    if (weights.size() != spec_.layers() || biases.size() != spec_.layers()) {
        throw std::invalid_argument("MLP parameter count does not match spec");
    }
    for (std::size_t l = 0; l < spec_.layers(); ++l) {
        const std::size_t in = spec_.widths[l], out = spec_.widths[l + 1];
        if (weights[l].rows() != in || weights[l].cols() != out || biases[l].rows() != 1 || biases[l].cols() != out) {
            throw std::invalid_argument("MLP layer " + std::to_string(l) + " parameter shape mismatch");
        }
        weights_.emplace_back(name + ".w" + std::to_string(l), std::move(weights[l]));
        biases_.emplace_back(name + ".b" + std::to_string(l), std::move(biases[l]));
    }
}

namespace {

Var activate(Var x, Activation a) {
    switch (a) {
        case Activation::Tanh: return ad::tanh(x);
        case Activation::Relu: return ad::relu(x);
        case Activation::Identity: break;
    }
    return x;
}

void activate_inplace(Matrix& m, Activation a) {
    if (a == Activation::Tanh) {
        for (double& v : m.values()) v = std::tanh(v);
    } else if (a == Activation::Relu) {
        for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
    }
}

}  // namespace

Var Mlp::forward(Tape& tape, Var x, bool trainable) {
    if (x.cols() != input_width()) {
        throw std::invalid_argument("MLP input width " + std::to_string(x.cols()) + " != expected " +
                                    std::to_string(input_width()));
    }
    Var h = x;
    for (std::size_t l = 0; l < spec_.layers(); ++l) {
        Var w = trainable ? tape.param(weights_[l]) : tape.constant(weights_[l].value);
        Var b = trainable ? tape.param(biases_[l]) : tape.constant(biases_[l].value);
        h = activate(ad::add_row(ad::matmul(h, w), b), spec_.activations[l]);
    }
    return h;
}

Matrix Mlp::forward(const Matrix& x) const {
    if (x.cols() != input_width()) {
        throw std::invalid_argument("MLP input width " + std::to_string(x.cols()) + " != expected " +
                                    std::to_string(input_width()));
    }
    Matrix h = x;
    for (std::size_t l = 0; l < spec_.layers(); ++l) {
        h = matmul(h, weights_[l].value);
        add_row_inplace(h, biases_[l].value);
        activate_inplace(h, spec_.activations[l]);
    }
    return h;
}

Vector Mlp::forward(std::span<const double> x) const {
    Matrix out = forward(Matrix::row_vector(x));
    return Vector(out.values().begin(), out.values().end());
}

std::vector<Parameter*> Mlp::parameters() {
    std::vector<Parameter*> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.push_back(&weights_[l]);
        out.push_back(&biases_[l]);
    }
    return out;
}

std::vector<const Parameter*> Mlp::parameters() const {
    std::vector<const Parameter*> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.push_back(&weights_[l]);
        out.push_back(&biases_[l]);
    }
    return out;
}

void Mlp::zero_grad() {
    for (Parameter* p : parameters()) p->zero_grad();
}

Var mlp_forward(Tape& tape, Mlp& net, std::span<const double> x) {
    return net.forward(tape, tape.input(Matrix::row_vector(x)));
}

void sgd_step(std::span<Parameter* const> params, double lr) {
    if (lr == 0.0) return;
    for (Parameter* p : params) {
        if (p->grad.size() != p->value.size()) continue;  // never touched by backward
        double* v = p->value.data();
        const double* g = p->grad.data();
        for (std::size_t k = 0; k < p->value.size(); ++k) v[k] -= lr * g[k];
    }
}

void zero_grads(std::span<Parameter* const> params) {
    for (Parameter* p : params) p->zero_grad();
}

}  // namespace oal
