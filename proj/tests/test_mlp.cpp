#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "genmix/adam.hpp"
#include "genmix/mlp.hpp"

using namespace genmix;

namespace {

MlpParams zero_params(const MlpSpec& spec) {
    MlpParams p;
    p.weights.resize(spec.num_layers());
    p.biases.resize(spec.num_layers());
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        p.weights[l].resize(static_cast<std::size_t>(spec.layer_widths[l + 1]),
                            static_cast<std::size_t>(spec.layer_widths[l]));
        p.biases[l].assign(static_cast<std::size_t>(spec.layer_widths[l + 1]), 0.0);
    }
    return p;
}

// quadratic probe loss: 0.5 * sum of squared outputs
double sq_loss(const Matrix& out, Matrix* grad) {
    double s = 0.0;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) {
            s += 0.5 * out(r, c) * out(r, c);
            if (grad) (*grad)(r, c) = out(r, c);
        }
    return s;
}

} // namespace

TEST_CASE("identity weights pass the input through", "[mlp]") {
    MlpSpec spec = make_mlp_spec({2, 2}, Activation::tanh);
    MlpParams p = zero_params(spec);
    p.weights[0](0, 0) = 1.0;
    p.weights[0](1, 1) = 1.0;
    Matrix x(3, 2);
    x(0, 0) = 1.5;
    x(0, 1) = -2.0;
    x(1, 0) = 0.0;
    x(1, 1) = 7.0;
    x(2, 0) = -0.25;
    x(2, 1) = 4.0;
    Tape t;
    forward(spec, p, x, t);
    REQUIRE(outputs(t) == x);
}

TEST_CASE("relu net matches a worked example", "[mlp]") {
    // x = (1, 2); layer 1 pre-activations (-0.5, 3) relu to (0, 3);
    // output 2*0 - 3*3 + 0.25 = -8.75
    MlpSpec spec = make_mlp_spec({2, 2, 1}, Activation::relu);
    MlpParams p = zero_params(spec);
    p.weights[0](0, 0) = 1.0;
    p.weights[0](0, 1) = -1.0;
    p.weights[0](1, 0) = 0.0;
    p.weights[0](1, 1) = 2.0;
    p.biases[0] = {0.5, -1.0};
    p.weights[1](0, 0) = 2.0;
    p.weights[1](0, 1) = -3.0;
    p.biases[1] = {0.25};
    Matrix x(1, 2);
    x(0, 0) = 1.0;
    x(0, 1) = 2.0;
    Tape t;
    forward(spec, p, x, t);
    REQUIRE(outputs(t)(0, 0) == Catch::Approx(-8.75).epsilon(1e-14));
}

TEST_CASE("sigmoid output squashes the logit", "[mlp]") {
    MlpSpec spec = make_mlp_spec({1, 1}, Activation::tanh, OutputActivation::sigmoid);
    MlpParams p = zero_params(spec);
    p.weights[0](0, 0) = 1.0;
    Matrix x(2, 1);
    x(0, 0) = 0.0;
    x(1, 0) = 100.0;
    Tape t;
    forward(spec, p, x, t);
    REQUIRE(outputs(t)(0, 0) == Catch::Approx(0.5).epsilon(1e-14));
    REQUIRE(outputs(t)(1, 0) == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("linear regression gradient matches the closed form", "[mlp]") {
    // out = W x with W = 0; loss = 1/(2B) ||out - y||^2 so
    // dL/dW(0,i) = -(1/B) sum_b y_b x_{b,i}
    MlpSpec spec = make_mlp_spec({3, 1}, Activation::tanh);
    MlpParams p = zero_params(spec);
    Matrix x(2, 3);
    double xv[2][3] = {{1.0, 2.0, -1.0}, {0.5, -3.0, 4.0}};
    double yv[2] = {2.0, -1.0};
    for (int b = 0; b < 2; ++b)
        for (int i = 0; i < 3; ++i) x(b, i) = xv[b][i];
    Tape t;
    forward(spec, p, x, t);
    Matrix og(2, 1);
    for (int b = 0; b < 2; ++b) og(b, 0) = (outputs(t)(b, 0) - yv[b]) / 2.0;
    MlpGrads g;
    backward(spec, p, t, og, g);
    for (int i = 0; i < 3; ++i) {
        double expect = -(yv[0] * xv[0][i] + yv[1] * xv[1][i]) / 2.0;
        REQUIRE(g.weights[0](0, i) == Catch::Approx(expect).margin(1e-14));
    }
    REQUIRE(g.biases[0][0] == Catch::Approx(-(yv[0] + yv[1]) / 2.0).margin(1e-14));
}

TEST_CASE("zero output gradient produces zero parameter gradients", "[mlp]") {
    Rng r(1);
    MlpSpec spec = make_mlp_spec({3, 4, 2}, Activation::tanh);
    MlpParams p = init_mlp_params(spec, r);
    Matrix x(3, 3);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = r.normal();
    Tape t;
    forward(spec, p, x, t);
    Matrix og(3, 2, 0.0);
    MlpGrads g;
    backward(spec, p, t, og, g);
    for (const auto& w : g.weights)
        for (std::size_t i = 0; i < w.size(); ++i) REQUIRE(w.data()[i] == 0.0);
    for (const auto& b : g.biases)
        for (double v : b) REQUIRE(v == 0.0);
}

TEST_CASE("backward matches central differences on many random nets", "[mlp]") {
    // fixed seeds so the sweep is reproducible; covers relu, tanh, sigmoid
    // and identity outputs, depths 1 to 3, batches 1 to 8
    int probes = 0;
    for (int trial = 0; trial < 60; ++trial) {
        Rng r(1000 + trial);
        int depth = 1 + static_cast<int>(r.below(3));
        std::vector<int> widths;
        widths.push_back(1 + static_cast<int>(r.below(5)));
        for (int l = 0; l < depth - 1; ++l) widths.push_back(1 + static_cast<int>(r.below(6)));
        widths.push_back(1 + static_cast<int>(r.below(4)));
        Activation act = r.below(2) == 0 ? Activation::relu : Activation::tanh;
        OutputActivation oact =
            r.below(2) == 0 ? OutputActivation::identity : OutputActivation::sigmoid;
        MlpSpec spec = make_mlp_spec(widths, act, oact);
        MlpParams p = init_mlp_params(spec, r);
        std::size_t batch = 1 + r.below(8);
        Matrix x(batch, static_cast<std::size_t>(widths.front()));
        // central differences are invalid within the probe step of a relu
        // kink, so redraw inputs until every pre-activation is clear of zero
        Tape tape;
        for (int redraw = 0; redraw < 50; ++redraw) {
            for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = r.normal();
            if (act != Activation::relu) break;
            forward(spec, p, x, tape);
            double closest = std::numeric_limits<double>::infinity();
            for (std::size_t l = 0; l + 1 < tape.pre.size(); ++l)
                for (std::size_t i = 0; i < tape.pre[l].size(); ++i)
                    closest = std::min(closest, std::fabs(tape.pre[l].data()[i]));
            if (closest > 1e-3) break;
        }
        double err = grad_check(spec, p, x, sq_loss);
        INFO("trial " << trial << " depth " << depth);
        REQUIRE(err < 1e-4);
        probes += static_cast<int>(p.count());
    }
    REQUIRE(probes >= 50);
}

TEST_CASE("stale tape is rejected after a parameter update", "[mlp]") {
    Rng r(2);
    MlpSpec spec = make_mlp_spec({2, 3, 1}, Activation::tanh);
    MlpParams p = init_mlp_params(spec, r);
    Matrix x(2, 2, 0.5);
    Tape t;
    forward(spec, p, x, t);
    Matrix og(2, 1, 1.0);
    MlpGrads g;
    backward(spec, p, t, og, g);  // fine before any update

    AdamState st = make_adam_state(p, {});
    adam_step(p, g, st);
    REQUIRE_THROWS_AS(backward(spec, p, t, og, g), UsageError);
    forward(spec, p, x, t);
    REQUIRE_NOTHROW(backward(spec, p, t, og, g));
}

TEST_CASE("shape mismatches are rejected", "[mlp]") {
    Rng r(3);
    MlpSpec spec = make_mlp_spec({3, 2}, Activation::tanh);
    MlpParams p = init_mlp_params(spec, r);
    Matrix bad(2, 4, 0.0);
    Tape t;
    REQUIRE_THROWS_AS(forward(spec, p, bad, t), ConfigError);

    MlpSpec broken;
    broken.layer_widths = {3, 2};
    broken.activations = {Activation::relu};  // one too many
    REQUIRE_THROWS_AS(broken.validate(), ConfigError);
    REQUIRE_THROWS_AS(make_mlp_spec({5}, Activation::relu), ConfigError);
}

TEST_CASE("initialization respects the fan-based bound", "[mlp]") {
    Rng r(4);
    MlpSpec spec = make_mlp_spec({10, 20, 5}, Activation::relu);
    MlpParams p = init_mlp_params(spec, r);
    double bound0 = std::sqrt(6.0 / (10 + 20));
    double bound1 = std::sqrt(6.0 / (20 + 5));
    for (std::size_t i = 0; i < p.weights[0].size(); ++i) {
        REQUIRE(std::fabs(p.weights[0].data()[i]) <= bound0);
    }
    for (std::size_t i = 0; i < p.weights[1].size(); ++i)
        REQUIRE(std::fabs(p.weights[1].data()[i]) <= bound1);
    for (double b : p.biases[0]) REQUIRE(b == 0.0);

    Rng r2(4);
    MlpParams q = init_mlp_params(spec, r2);
    REQUIRE(p.weights[0] == q.weights[0]);
    REQUIRE(p.weights[1] == q.weights[1]);
}

TEST_CASE("forward rejects non-finite outcomes", "[mlp]") {
    MlpSpec spec = make_mlp_spec({1, 1}, Activation::tanh);
    MlpParams p = zero_params(spec);
    p.weights[0](0, 0) = 1e308;
    Matrix x(1, 1);
    x(0, 0) = 1e308;
    Tape t;
    REQUIRE_THROWS_AS(forward(spec, p, x, t), NumericError);
}
