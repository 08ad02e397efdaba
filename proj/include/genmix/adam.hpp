#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "genmix/common.hpp"
#include "genmix/mlp.hpp"

namespace genmix {

struct AdamConfig {
    double lr = 0.005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const {
        if (!(lr > 0.0)) throw ConfigError("adam: lr must be positive");
        if (beta1 < 0.0 || beta1 >= 1.0) throw ConfigError("adam: beta1 must be in [0,1)");
        if (beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("adam: beta2 must be in [0,1)");
        if (!(eps > 0.0)) throw ConfigError("adam: eps must be positive");
    }
};

struct AdamState {
    MlpGrads m;  // first moment
    MlpGrads v;  // second moment
    std::int64_t t = 0;
    AdamConfig cfg;
};

inline AdamState make_adam_state(const MlpParams& params, AdamConfig cfg) {
    cfg.validate();
    AdamState st;
    st.cfg = cfg;
    st.m.resize_like(params);
    st.v.resize_like(params);
    for (auto& w : st.m.weights) w.fill(0.0);
    for (auto& w : st.v.weights) w.fill(0.0);
    return st;
}

// One bias-corrected Adam update, in place. Rejects non-finite gradients
// before touching any parameter so a failed step leaves params unchanged.
inline void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& st) {
    if (grads.weights.size() != params.weights.size())
        throw ConfigError("adam_step: grads do not match params");
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        if (!grads.weights[l].same_shape(params.weights[l]) ||
            grads.biases[l].size() != params.biases[l].size())
            throw ConfigError("adam_step: grads do not match params at layer " + std::to_string(l));
        if (!grads.weights[l].all_finite())
            throw NumericError("adam_step: non-finite weight gradient at layer " + std::to_string(l));
        for (double g : grads.biases[l])
            if (!std::isfinite(g))
                throw NumericError("adam_step: non-finite bias gradient at layer " + std::to_string(l));
    }

    st.t += 1;
    const double b1 = st.cfg.beta1, b2 = st.cfg.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
    auto update = [&](double& theta, double g, double& m, double& v) {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        double mhat = m / corr1;
        double vhat = v / corr2;
        theta -= st.cfg.lr * mhat / (std::sqrt(vhat) + st.cfg.eps);
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        Matrix& W = params.weights[l];
        const Matrix& G = grads.weights[l];
        Matrix& M = st.m.weights[l];
        Matrix& V = st.v.weights[l];
        for (std::size_t k = 0; k < W.size(); ++k) update(W.data()[k], G.data()[k], M.data()[k], V.data()[k]);
        for (std::size_t o = 0; o < params.biases[l].size(); ++o)
            update(params.biases[l][o], grads.biases[l][o], st.m.biases[l][o], st.v.biases[l][o]);
    }
    params.revision++;
}

} // namespace genmix
