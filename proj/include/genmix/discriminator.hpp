#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "genmix/adam.hpp"
#include "genmix/common.hpp"
#include "genmix/matrix.hpp"
#include "genmix/mlp.hpp"
#include "genmix/rng.hpp"

namespace genmix {

constexpr double kRatioClampEps = 1e-6;

enum class ReinitPolicy { fresh_each_round, persistent };

// Binary classifier between real data (label 1) and one model's samples
// (label 0). The net outputs a raw logit; sigmoid is applied only when a
// probability is consumed, and the cross entropy is computed in logit form,
// so saturated outputs stay finite.
struct Discriminator {
    MlpSpec spec;
    MlpParams params;
    AdamState adam;
};

inline Discriminator make_discriminator(int data_dim, const std::vector<int>& hidden,
                                        AdamConfig opt, Rng& rng) {
    if (data_dim < 1) throw ConfigError("discriminator: data_dim must be positive");
    Discriminator d;
    std::vector<int> widths{data_dim};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(1);
    d.spec = make_mlp_spec(widths, Activation::tanh);
    d.params = init_mlp_params(d.spec, rng);
    d.adam = make_adam_state(d.params, opt);
    return d;
}

struct DiscTrainStats {
    double mean_loss = 0.0;     // over the final epoch
    bool uninformative = false; // both classes were a single identical point
};

inline double bce_with_logits(double s, double y) {
    return std::max(s, 0.0) - s * y + std::log1p(std::exp(-std::fabs(s)));
}

// Trains on the union of `real` (label 1) and `fake` (label 0), shuffled
// together each epoch. Callers are expected to pass classes of equal size so
// that sigmoid(logit) estimates dP_real / (dP_real + dP_fake) without a
// prior-odds correction.
inline DiscTrainStats train_discriminator(Discriminator& d, const Matrix& real,
                                          const Matrix& fake, int epochs, int batch_size,
                                          Rng& rng) {
    const std::size_t R = real.rows(), F = fake.rows();
    if (R == 0 || F == 0) throw UsageError("train_discriminator: both classes must be nonempty");
    if (real.cols() != fake.cols() ||
        real.cols() != static_cast<std::size_t>(d.spec.input_dim()))
        throw ConfigError("train_discriminator: input dimension mismatch");
    if (epochs < 1) throw ConfigError("train_discriminator: epochs must be positive");
    if (batch_size < 1) throw ConfigError("train_discriminator: batch_size must be positive");

    DiscTrainStats stats;
    {
        // identical inputs across both classes leave the ratio uninformative
        const double* ref = real.row(0);
        bool all_same = true;
        for (std::size_t r = 0; all_same && r < R; ++r)
            all_same = squared_distance(real.row(r), ref, real.cols()) == 0.0;
        for (std::size_t r = 0; all_same && r < F; ++r)
            all_same = squared_distance(fake.row(r), ref, fake.cols()) == 0.0;
        stats.uninformative = all_same;
    }

    const std::size_t N = R + F;
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Matrix xbuf, out_grad;
    Tape tape;
    const std::size_t dcols = real.cols();
    for (int e = 0; e < epochs; ++e) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < N; start += static_cast<std::size_t>(batch_size)) {
            std::size_t B = std::min(static_cast<std::size_t>(batch_size), N - start);
            xbuf.resize(B, dcols);
            for (std::size_t b = 0; b < B; ++b) {
                std::size_t k = order[start + b];
                const double* src = k < R ? real.row(k) : fake.row(k - R);
                double* dst = xbuf.row(b);
                for (std::size_t c = 0; c < dcols; ++c) dst[c] = src[c];
            }
            forward(d.spec, d.params, xbuf, tape);
            const Matrix& logits = outputs(tape);
            out_grad.resize(B, 1);
            double batch_loss = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                double s = logits(b, 0);
                double y = order[start + b] < R ? 1.0 : 0.0;
                batch_loss += bce_with_logits(s, y);
                double sig = 1.0 / (1.0 + std::exp(-s));
                out_grad(b, 0) = (sig - y) / static_cast<double>(B);
            }
            MlpGrads grads;
            backward(d.spec, d.params, tape, out_grad, grads);
            adam_step(d.params, grads, d.adam);
            loss_sum += batch_loss;
        }
        if (e == epochs - 1) stats.mean_loss = loss_sum / static_cast<double>(N);
    }
    return stats;
}

// sigmoid of the logit for every row of `points`
inline void predict_d(const Discriminator& d, const Matrix& points, std::vector<double>& out) {
    Tape tape;
    forward(d.spec, d.params, points, tape);
    const Matrix& logits = outputs(tape);
    out.resize(points.rows());
    for (std::size_t r = 0; r < points.rows(); ++r)
        out[r] = 1.0 / (1.0 + std::exp(-logits(r, 0)));
}

// (1 - D) / D with D clamped away from {0, 1}; strictly decreasing in D
inline double clamped_ratio(double d_value) {
    double d = std::clamp(d_value, kRatioClampEps, 1.0 - kRatioClampEps);
    return (1.0 - d) / d;
}

// unnormalized dP_model / dP_data estimate at one point
inline double density_ratio(const Discriminator& d, const double* x, int dim) {
    Matrix pt(1, static_cast<std::size_t>(dim));
    for (int c = 0; c < dim; ++c) pt(0, c) = x[c];
    std::vector<double> dv;
    predict_d(d, pt, dv);
    return clamped_ratio(dv[0]);
}

// Per-point model likelihood estimates. values(i, j) is the estimated
// probability of data point i under model j, normalized so every column sums
// to one over the dataset; normalizers[j] holds the raw-ratio column sum.
struct LikelihoodTable {
    Matrix values;
    std::vector<double> normalizers;
};

inline void validate_column_stochastic(const LikelihoodTable& t, double tol = 1e-9) {
    for (std::size_t j = 0; j < t.values.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < t.values.rows(); ++i) {
            double v = t.values(i, j);
            if (!(v >= 0.0)) throw NumericError("likelihood table: negative entry");
            s += v;
        }
        if (std::fabs(s - 1.0) > tol)
            throw NumericError("likelihood table: column " + std::to_string(j) +
                               " sums to " + std::to_string(s));
    }
}

// Normalizes raw per-column ratios into a likelihood table. Columns scaled by
// any positive constant produce the same table, which is what makes the
// unnormalized discriminator ratios usable as likelihoods.
inline LikelihoodTable normalize_ratios(const Matrix& raw) {
    LikelihoodTable t;
    t.values.resize(raw.rows(), raw.cols());
    t.normalizers.assign(raw.cols(), 0.0);
    for (std::size_t j = 0; j < raw.cols(); ++j) {
        double z = 0.0;
        for (std::size_t i = 0; i < raw.rows(); ++i) {
            double v = raw(i, j);
            if (!(v > 0.0) || !std::isfinite(v))
                throw NumericError("normalize_ratios: ratios must be positive and finite");
            z += v;
        }
        t.normalizers[j] = z;
        for (std::size_t i = 0; i < raw.rows(); ++i) t.values(i, j) = raw(i, j) / z;
    }
    return t;
}

struct DiscriminatorEnsemble {
    std::vector<Discriminator> members;
    ReinitPolicy policy = ReinitPolicy::fresh_each_round;
    int data_dim = 0;
    std::vector<int> hidden;
    AdamConfig opt;

    void reinit_member(std::size_t j, Rng& rng) {
        members.at(j) = make_discriminator(data_dim, hidden, opt, rng);
    }
};

inline DiscriminatorEnsemble make_ensemble(std::size_t k, int data_dim,
                                           const std::vector<int>& hidden, AdamConfig opt,
                                           ReinitPolicy policy, std::uint64_t seed) {
    DiscriminatorEnsemble e;
    e.policy = policy;
    e.data_dim = data_dim;
    e.hidden = hidden;
    e.opt = opt;
    e.members.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        Rng r = Rng::derive(seed, {0x6469u, 0, j});  // initial member params
        e.members.push_back(make_discriminator(data_dim, hidden, opt, r));
    }
    return e;
}

inline LikelihoodTable likelihood_table(const DiscriminatorEnsemble& ens, const Matrix& data) {
    if (ens.members.empty()) throw UsageError("likelihood_table: empty ensemble");
    if (data.rows() == 0) throw UsageError("likelihood_table: empty dataset");
    Matrix raw(data.rows(), ens.members.size());
    std::vector<double> dv;
    for (std::size_t j = 0; j < ens.members.size(); ++j) {
        predict_d(ens.members[j], data, dv);
        for (std::size_t i = 0; i < data.rows(); ++i) raw(i, j) = clamped_ratio(dv[i]);
    }
    LikelihoodTable t = normalize_ratios(raw);
    validate_column_stochastic(t);
    return t;
}

} // namespace genmix
