#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "genmix/common.hpp"
#include "genmix/matrix.hpp"
#include "genmix/rng.hpp"

namespace genmix {

enum class Activation { relu, tanh };
enum class OutputActivation { identity, sigmoid };

// Fully connected net: layer_widths = {in, h1, ..., out}. One hidden
// activation per hidden layer, so activations.size() == layer_widths.size()-2.
struct MlpSpec {
    std::vector<int> layer_widths;
    std::vector<Activation> activations;
    OutputActivation output_activation = OutputActivation::identity;

    std::size_t num_layers() const { return layer_widths.size() - 1; }
    int input_dim() const { return layer_widths.front(); }
    int output_dim() const { return layer_widths.back(); }

    void validate() const {
        if (layer_widths.size() < 2)
            throw ConfigError("mlp spec needs at least input and output widths");
        for (int w : layer_widths)
            if (w < 1) throw ConfigError("mlp layer width must be positive");
        if (activations.size() != layer_widths.size() - 2)
            throw ConfigError("mlp spec needs one activation per hidden layer");
    }
};

inline MlpSpec make_mlp_spec(std::vector<int> widths, Activation hidden,
                             OutputActivation out = OutputActivation::identity) {
    MlpSpec s;
    s.layer_widths = std::move(widths);
    if (s.layer_widths.size() >= 2)
        s.activations.assign(s.layer_widths.size() - 2, hidden);
    s.output_activation = out;
    s.validate();
    return s;
}

// weights[l] has shape (width[l+1], width[l]); row o holds the fan-in of unit o
struct MlpParams {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    std::uint64_t revision = 0;

    bool matches(const MlpSpec& spec) const {
        if (weights.size() != spec.num_layers() || biases.size() != spec.num_layers())
            return false;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            if (weights[l].rows() != static_cast<std::size_t>(spec.layer_widths[l + 1]) ||
                weights[l].cols() != static_cast<std::size_t>(spec.layer_widths[l]) ||
                biases[l].size() != static_cast<std::size_t>(spec.layer_widths[l + 1]))
                return false;
        }
        return true;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
        return n;
    }
};

struct MlpGrads {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    void resize_like(const MlpParams& p) {
        weights.resize(p.weights.size());
        biases.resize(p.biases.size());
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            weights[l].resize(p.weights[l].rows(), p.weights[l].cols());
            biases[l].assign(p.biases[l].size(), 0.0);
        }
    }
};

// Uniform(-b, b) with b = sqrt(6 / (fan_in + fan_out)); weights drawn in
// row-major order, biases zero. Draw order is part of the reproducibility
// contract.
inline MlpParams init_mlp_params(const MlpSpec& spec, Rng& rng) {
    spec.validate();
    MlpParams p;
    p.weights.resize(spec.num_layers());
    p.biases.resize(spec.num_layers());
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        int fan_in = spec.layer_widths[l];
        int fan_out = spec.layer_widths[l + 1];
        double bound = std::sqrt(6.0 / (fan_in + fan_out));
        p.weights[l].resize(fan_out, fan_in);
        for (std::size_t o = 0; o < p.weights[l].rows(); ++o)
            for (std::size_t i = 0; i < p.weights[l].cols(); ++i)
                p.weights[l](o, i) = rng.uniform(-bound, bound);
        p.biases[l].assign(fan_out, 0.0);
    }
    return p;
}

// Records everything backward needs. Reused across steps: buffers are resized
// in place, so steady-state training does not allocate.
struct Tape {
    Matrix input;
    std::vector<Matrix> pre;  // pre-activation per layer
    std::vector<Matrix> act;  // post-activation per layer; act.back() is the output
    std::vector<Matrix> scratch;
    std::uint64_t params_revision = ~0ull;
};

inline double apply_activation(Activation a, double x) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::tanh: return std::tanh(x);
    }
    return x;
}

// derivative in terms of pre-activation x and post-activation y
inline double activation_deriv(Activation a, double x, double y) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: return 1.0 - y * y;
    }
    return 1.0;
}

inline void forward(const MlpSpec& spec, const MlpParams& params, const Matrix& batch,
                    Tape& tape) {
    if (batch.cols() != static_cast<std::size_t>(spec.input_dim()))
        throw ConfigError("forward: batch has " + std::to_string(batch.cols()) +
                          " columns, expected " + std::to_string(spec.input_dim()));
    if (!params.matches(spec)) throw ConfigError("forward: params do not match spec");

    const std::size_t L = spec.num_layers();
    const std::size_t B = batch.rows();
    tape.input = batch;
    tape.pre.resize(L);
    tape.act.resize(L);
    tape.scratch.resize(L);

    const Matrix* in = &tape.input;
    for (std::size_t l = 0; l < L; ++l) {
        const Matrix& W = params.weights[l];
        const std::vector<double>& b = params.biases[l];
        const std::size_t out_w = W.rows();
        tape.pre[l].resize(B, out_w);
        tape.act[l].resize(B, out_w);
        tape.scratch[l].resize(B, out_w);
        for (std::size_t r = 0; r < B; ++r) {
            const double* x = in->row(r);
            double* z = tape.pre[l].row(r);
            for (std::size_t o = 0; o < out_w; ++o) {
                const double* w = W.row(o);
                double s = b[o];
                for (std::size_t i = 0; i < W.cols(); ++i) s += w[i] * x[i];
                z[o] = s;
            }
        }
        const bool last = (l == L - 1);
        for (std::size_t r = 0; r < B; ++r) {
            const double* z = tape.pre[l].row(r);
            double* a = tape.act[l].row(r);
            if (last) {
                if (spec.output_activation == OutputActivation::sigmoid)
                    for (std::size_t o = 0; o < out_w; ++o) a[o] = 1.0 / (1.0 + std::exp(-z[o]));
                else
                    for (std::size_t o = 0; o < out_w; ++o) a[o] = z[o];
            } else {
                Activation act = spec.activations[l];
                for (std::size_t o = 0; o < out_w; ++o) a[o] = apply_activation(act, z[o]);
            }
        }
        in = &tape.act[l];
    }
    if (!tape.act.back().all_finite())
        throw NumericError("forward: non-finite network output");
    tape.params_revision = params.revision;
}

inline const Matrix& outputs(const Tape& tape) { return tape.act.back(); }

// out_grad is dLoss/dOutput (post output activation). Fills `grads`; if
// input_grad is given it receives dLoss/dInput. The tape must come from a
// forward pass with the exact same params revision.
inline void backward(const MlpSpec& spec, const MlpParams& params, Tape& tape,
                     const Matrix& out_grad, MlpGrads& grads, Matrix* input_grad = nullptr) {
    if (tape.params_revision != params.revision)
        throw UsageError("backward: tape is stale, rerun forward after any parameter update");
    if (!out_grad.same_shape(tape.act.back()))
        throw ConfigError("backward: out_grad shape does not match network output");

    const std::size_t L = spec.num_layers();
    const std::size_t B = tape.input.rows();
    grads.resize_like(params);

    // delta at the last layer's pre-activation
    {
        Matrix& g = tape.scratch[L - 1];
        const Matrix& out = tape.act[L - 1];
        if (spec.output_activation == OutputActivation::sigmoid) {
            for (std::size_t r = 0; r < B; ++r)
                for (std::size_t o = 0; o < out.cols(); ++o) {
                    double y = out(r, o);
                    g(r, o) = out_grad(r, o) * y * (1.0 - y);
                }
        } else {
            for (std::size_t r = 0; r < B; ++r)
                for (std::size_t o = 0; o < out.cols(); ++o) g(r, o) = out_grad(r, o);
        }
    }

    for (std::size_t l = L; l-- > 0;) {
        const Matrix& g = tape.scratch[l];
        const Matrix& below = (l == 0) ? tape.input : tape.act[l - 1];
        Matrix& dW = grads.weights[l];
        std::vector<double>& db = grads.biases[l];
        dW.fill(0.0);
        for (auto& v : db) v = 0.0;
        for (std::size_t r = 0; r < B; ++r) {
            const double* gr = g.row(r);
            const double* xr = below.row(r);
            for (std::size_t o = 0; o < dW.rows(); ++o) {
                double go = gr[o];
                if (go == 0.0) continue;
                double* w = dW.row(o);
                for (std::size_t i = 0; i < dW.cols(); ++i) w[i] += go * xr[i];
                db[o] += go;
            }
        }
        Matrix* down = nullptr;
        if (l > 0)
            down = &tape.scratch[l - 1];
        else if (input_grad) {
            input_grad->resize(B, params.weights[0].cols());
            down = input_grad;
        }
        if (down) {
            const Matrix& W = params.weights[l];
            for (std::size_t r = 0; r < B; ++r) {
                const double* gr = g.row(r);
                double* dn = down->row(r);
                for (std::size_t i = 0; i < W.cols(); ++i) dn[i] = 0.0;
                for (std::size_t o = 0; o < W.rows(); ++o) {
                    double go = gr[o];
                    if (go == 0.0) continue;
                    const double* w = W.row(o);
                    for (std::size_t i = 0; i < W.cols(); ++i) dn[i] += go * w[i];
                }
            }
            if (l > 0) {
                Activation act = spec.activations[l - 1];
                const Matrix& z = tape.pre[l - 1];
                const Matrix& a = tape.act[l - 1];
                for (std::size_t r = 0; r < B; ++r)
                    for (std::size_t i = 0; i < down->cols(); ++i)
                        (*down)(r, i) *= activation_deriv(act, z(r, i), a(r, i));
            }
        }
    }
}

// Central-difference check of backward against the loss. `loss` maps the
// network output to a scalar and, when grad != nullptr, writes dLoss/dOutput.
// Returns the max over parameters of |analytic - numeric| relative error.
inline double grad_check(const MlpSpec& spec, MlpParams& params, const Matrix& batch,
                         const std::function<double(const Matrix&, Matrix*)>& loss,
                         double h = 1e-5) {
    Tape tape;
    forward(spec, params, batch, tape);
    Matrix out_grad(outputs(tape).rows(), outputs(tape).cols());
    loss(outputs(tape), &out_grad);
    MlpGrads grads;
    backward(spec, params, tape, out_grad, grads);

    auto eval = [&]() {
        Tape t;
        forward(spec, params, batch, t);
        return loss(outputs(t), nullptr);
    };

    double worst = 0.0;
    auto probe = [&](double& theta, double analytic) {
        const double saved = theta;
        theta = saved + h;
        params.revision++;
        double up = eval();
        theta = saved - h;
        params.revision++;
        double down = eval();
        theta = saved;
        params.revision++;
        double numeric = (up - down) / (2.0 * h);
        double rel = std::fabs(analytic - numeric) /
                     std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
        if (rel > worst) worst = rel;
    };

    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        for (std::size_t o = 0; o < params.weights[l].rows(); ++o)
            for (std::size_t i = 0; i < params.weights[l].cols(); ++i)
                probe(params.weights[l](o, i), grads.weights[l](o, i));
        for (std::size_t o = 0; o < params.biases[l].size(); ++o)
            probe(params.biases[l][o], grads.biases[l][o]);
    }
    return worst;
}

} // namespace genmix
