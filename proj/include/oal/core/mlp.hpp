#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "oal/core/autodiff.hpp"
#include "oal/core/matrix.hpp"
#include "oal/core/rng.hpp"

namespace oal {

enum class Activation { Identity, Tanh, Relu };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct MlpSpec {
    std::vector<std::size_t> widths;       // input width first, output width last
    std::vector<Activation> activations;   // one per layer (widths.size() - 1)

    // Hidden layers tanh, output layer `out`.
    static MlpSpec tanh_hidden(std::vector<std::size_t> widths, Activation out = Activation::Identity);

    std::size_t input_width() const { return widths.front(); }
    std::size_t output_width() const { return widths.back(); }
    std::size_t layers() const { return widths.size() - 1; }
    void validate() const;
};

// Weights are stored input-major (in x out) so that a batch forward is X * W + b.
class Mlp {
public:
    Mlp() = default;
    // Glorot-uniform weights from `rng`, zero biases.
    Mlp(MlpSpec spec, RngStream rng, const std::string& name = "mlp");
    // Adopts explicit parameters; shapes must match the spec.
    Mlp(MlpSpec spec, std::vector<Matrix> weights, std::vector<Matrix> biases, const std::string& name = "mlp");

    const MlpSpec& spec() const { return spec_; }
    std::size_t input_width() const { return spec_.input_width(); }
    std::size_t output_width() const { return spec_.output_width(); }

    // Graph-recorded forward of a batch (rows are samples). With trainable=false
    // the parameters enter the tape as constants and receive no gradient.
    Var forward(Tape& tape, Var x, bool trainable = true);
    // Plain forward of a batch without recording.
    Matrix forward(const Matrix& x) const;
    Vector forward(std::span<const double> x) const;

    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    Parameter& weight(std::size_t layer) { return weights_.at(layer); }
    Parameter& bias(std::size_t layer) { return biases_.at(layer); }
    const Parameter& weight(std::size_t layer) const { return weights_.at(layer); }
    const Parameter& bias(std::size_t layer) const { return biases_.at(layer); }

    void zero_grad();

private:
    MlpSpec spec_;
    std::vector<Parameter> weights_;
    std::vector<Parameter> biases_;
};

// Convenience for single-vector graph forward.
Var mlp_forward(Tape& tape, Mlp& net, std::span<const double> x);

// p <- p - lr * g for every parameter; deterministic.
void sgd_step(std::span<Parameter* const> params, double lr);
void zero_grads(std::span<Parameter* const> params);

}  // namespace oal
