#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "genmix/adam.hpp"
#include "genmix/common.hpp"
#include "genmix/matrix.hpp"
#include "genmix/mlp.hpp"
#include "genmix/rng.hpp"
#include "genmix/serialize.hpp"

namespace genmix {

class GenerativeModel {
public:
    virtual ~GenerativeModel() = default;
    virtual int data_dim() const = 0;
    // one pass over the subset; returns the mean per-point training loss
    virtual double train_epoch(const Matrix& subset, Rng& rng) = 0;
    virtual Matrix sample(int n, Rng& rng) const = 0;
    // a representative point in data space (decoded prior mean)
    virtual std::vector<double> mean_point() const = 0;
    virtual void save(std::ostream& os) const = 0;
    virtual std::unique_ptr<GenerativeModel> clone() const = 0;
    virtual std::string kind() const = 0;
};

constexpr double kLogvarClamp = 10.0;

// Gaussian-latent, Gaussian-observation VAE. The encoder outputs per-point
// mean and log-variance (2 * latent columns, log-variance clamped to
// [-10, 10]); the decoder outputs the observation mean, with a fixed
// observation variance sigma_dec2. Trained by minimizing the negative ELBO:
// Gaussian reconstruction NLL plus the analytic KL to a standard normal
// prior, one reparameterization sample per point.
class GaussianVae final : public GenerativeModel {
public:
    MlpSpec enc_spec, dec_spec;
    MlpParams enc_params, dec_params;
    AdamState enc_adam, dec_adam;
    int dim = 0;
    int latent = 0;
    double sigma_dec2 = 1.0;
    int batch_size = 32;

    GaussianVae() = default;

    GaussianVae(int data_dim, int latent_dim, const std::vector<int>& hidden, AdamConfig opt,
                double sigma2, int batch, Rng& init_rng)
        : dim(data_dim), latent(latent_dim), sigma_dec2(sigma2), batch_size(batch) {
        if (data_dim < 1) throw ConfigError("vae: data_dim must be positive");
        if (latent_dim < 1) throw ConfigError("vae: latent_dim must be positive");
        if (!(sigma2 > 0.0)) throw ConfigError("vae: observation variance must be positive");
        if (batch < 1) throw ConfigError("vae: batch_size must be positive");
        std::vector<int> enc_w{data_dim};
        enc_w.insert(enc_w.end(), hidden.begin(), hidden.end());
        enc_w.push_back(2 * latent_dim);
        enc_spec = make_mlp_spec(enc_w, Activation::tanh);
        std::vector<int> dec_w{latent_dim};
        dec_w.insert(dec_w.end(), hidden.begin(), hidden.end());
        dec_w.push_back(data_dim);
        dec_spec = make_mlp_spec(dec_w, Activation::tanh);
        enc_params = init_mlp_params(enc_spec, init_rng);
        dec_params = init_mlp_params(dec_spec, init_rng);
        enc_adam = make_adam_state(enc_params, opt);
        dec_adam = make_adam_state(dec_params, opt);
    }

    struct ElboTerms {
        double total = 0.0;
        double recon = 0.0;
        double kl = 0.0;
    };

    // Negative ELBO (batch mean) with the latent noise passed in explicitly,
    // which keeps the loss a deterministic function of (params, batch, noise)
    // so finite differencing can validate the gradients. noise has shape
    // (batch rows, latent).
    ElboTerms elbo_grad(const Matrix& batch, const Matrix& noise, MlpGrads* enc_g,
                        MlpGrads* dec_g) {
        const std::size_t B = batch.rows();
        if (batch.cols() != static_cast<std::size_t>(dim))
            throw ConfigError("elbo: batch dimension mismatch");
        if (noise.rows() != B || noise.cols() != static_cast<std::size_t>(latent))
            throw ConfigError("elbo: noise shape must be (batch, latent)");
        if ((enc_g == nullptr) != (dec_g == nullptr))
            throw UsageError("elbo: pass both gradient sinks or neither");

        forward(enc_spec, enc_params, batch, enc_tape_);
        const Matrix& enc_out = outputs(enc_tape_);

        z_.resize(B, static_cast<std::size_t>(latent));
        lv_.resize(B, static_cast<std::size_t>(latent));
        double kl_sum = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            for (int j = 0; j < latent; ++j) {
                double mu = enc_out(b, static_cast<std::size_t>(j));
                double raw = enc_out(b, static_cast<std::size_t>(latent + j));
                double lv = std::clamp(raw, -kLogvarClamp, kLogvarClamp);
                lv_(b, static_cast<std::size_t>(j)) = lv;
                double sig = std::exp(0.5 * lv);
                z_(b, static_cast<std::size_t>(j)) = mu + sig * noise(b, static_cast<std::size_t>(j));
                kl_sum += 0.5 * (mu * mu + std::exp(lv) - lv - 1.0);
            }
        }

        forward(dec_spec, dec_params, z_, dec_tape_);
        const Matrix& m = outputs(dec_tape_);

        double recon_sum = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            double sq = squared_distance(m.row(b), batch.row(b), static_cast<std::size_t>(dim));
            recon_sum += 0.5 * sq / sigma_dec2;
        }
        recon_sum += static_cast<double>(B) * 0.5 * dim * std::log(kTwoPi * sigma_dec2);

        ElboTerms t;
        t.recon = recon_sum / static_cast<double>(B);
        t.kl = kl_sum / static_cast<double>(B);
        t.total = t.recon + t.kl;
        if (!std::isfinite(t.recon)) throw NumericError("elbo: non-finite reconstruction term");
        if (!std::isfinite(t.kl)) throw NumericError("elbo: non-finite kl term");

        if (enc_g) {
            const double invB = 1.0 / static_cast<double>(B);
            dm_.resize(B, static_cast<std::size_t>(dim));
            for (std::size_t b = 0; b < B; ++b)
                for (int j = 0; j < dim; ++j)
                    dm_(b, static_cast<std::size_t>(j)) =
                        (m(b, static_cast<std::size_t>(j)) - batch(b, static_cast<std::size_t>(j))) *
                        invB / sigma_dec2;
            backward(dec_spec, dec_params, dec_tape_, dm_, *dec_g, &dz_);

            enc_out_grad_.resize(B, static_cast<std::size_t>(2 * latent));
            for (std::size_t b = 0; b < B; ++b) {
                for (int j = 0; j < latent; ++j) {
                    auto ju = static_cast<std::size_t>(j);
                    double mu = enc_out(b, ju);
                    double raw = enc_out(b, static_cast<std::size_t>(latent + j));
                    double lv = lv_(b, ju);
                    double sig = std::exp(0.5 * lv);
                    double dz = dz_(b, ju);
                    enc_out_grad_(b, ju) = dz + mu * invB;
                    double dlv = dz * 0.5 * sig * noise(b, ju) +
                                 0.5 * (std::exp(lv) - 1.0) * invB;
                    bool clamped = raw <= -kLogvarClamp || raw >= kLogvarClamp;
                    enc_out_grad_(b, static_cast<std::size_t>(latent + j)) = clamped ? 0.0 : dlv;
                }
            }
            backward(enc_spec, enc_params, enc_tape_, enc_out_grad_, *enc_g);
        }
        return t;
    }

    ElboTerms elbo(const Matrix& batch, const Matrix& noise) {
        return elbo_grad(batch, noise, nullptr, nullptr);
    }

    int data_dim() const override { return dim; }

    double train_epoch(const Matrix& subset, Rng& rng) override {
        const std::size_t N = subset.rows();
        if (N == 0) throw UsageError("train_epoch: empty subset");
        if (subset.cols() != static_cast<std::size_t>(dim))
            throw ConfigError("train_epoch: subset dimension mismatch");
        order_.resize(N);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        rng.shuffle(order_);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < N; start += static_cast<std::size_t>(batch_size)) {
            std::size_t B = std::min(static_cast<std::size_t>(batch_size), N - start);
            batch_idx_.assign(order_.begin() + static_cast<std::ptrdiff_t>(start),
                              order_.begin() + static_cast<std::ptrdiff_t>(start + B));
            gather_rows(subset, batch_idx_, xbuf_);
            noise_.resize(B, static_cast<std::size_t>(latent));
            for (std::size_t b = 0; b < B; ++b)
                for (int j = 0; j < latent; ++j) noise_(b, static_cast<std::size_t>(j)) = rng.normal();
            ElboTerms t = elbo_grad(xbuf_, noise_, &enc_g_, &dec_g_);
            adam_step(enc_params, enc_g_, enc_adam);
            adam_step(dec_params, dec_g_, dec_adam);
            loss_sum += t.total * static_cast<double>(B);
        }
        return loss_sum / static_cast<double>(N);
    }

    // decoded means of prior draws; deliberately no observation noise added
    Matrix sample(int n, Rng& rng) const override {
        if (n < 0) throw ConfigError("sample: n must be nonnegative");
        Matrix z(static_cast<std::size_t>(n), static_cast<std::size_t>(latent));
        for (std::size_t b = 0; b < z.rows(); ++b)
            for (int j = 0; j < latent; ++j) z(b, static_cast<std::size_t>(j)) = rng.normal();
        Tape tape;
        forward(dec_spec, dec_params, z, tape);
        return outputs(tape);
    }

    std::vector<double> mean_point() const override {
        Matrix z(1, static_cast<std::size_t>(latent), 0.0);
        Tape tape;
        forward(dec_spec, dec_params, z, tape);
        const Matrix& out = outputs(tape);
        return std::vector<double>(out.row(0), out.row(0) + dim);
    }

    void save(std::ostream& os) const override {
        os.write("GMXM", 4);
        io::write_u32(os, 1u);
        io::write_u32(os, 0u);  // kind: gaussian vae
        io::write_u32(os, static_cast<std::uint32_t>(dim));
        io::write_u32(os, static_cast<std::uint32_t>(latent));
        io::write_f64(os, sigma_dec2);
        io::write_u32(os, static_cast<std::uint32_t>(batch_size));
        io::write_f64(os, enc_adam.cfg.lr);
        io::write_f64(os, enc_adam.cfg.beta1);
        io::write_f64(os, enc_adam.cfg.beta2);
        io::write_f64(os, enc_adam.cfg.eps);
        write_mlp(os, enc_spec, enc_params);
        write_mlp(os, dec_spec, dec_params);
    }

    std::unique_ptr<GenerativeModel> clone() const override {
        return std::make_unique<GaussianVae>(*this);
    }

    std::string kind() const override { return "gaussian_vae"; }

private:
    // reusable work buffers so steady-state training does not allocate
    Tape enc_tape_, dec_tape_;
    Matrix z_, lv_, dm_, dz_, enc_out_grad_, xbuf_, noise_;
    MlpGrads enc_g_, dec_g_;
    std::vector<std::size_t> order_, batch_idx_;
};

// The constant-encoder, identity-decoder limit: the model is just a point
// mu in data space, and one training pass sets mu to the subset mean, the
// exact minimizer of the mean squared reconstruction objective.
class DegenerateVae final : public GenerativeModel {
public:
    std::vector<double> mu;

    DegenerateVae() = default;
    explicit DegenerateVae(std::vector<double> mean) : mu(std::move(mean)) {
        if (mu.empty()) throw ConfigError("degenerate vae: mean must be nonempty");
    }
    explicit DegenerateVae(int data_dim) : mu(static_cast<std::size_t>(data_dim), 0.0) {
        if (data_dim < 1) throw ConfigError("degenerate vae: data_dim must be positive");
    }

    int data_dim() const override { return static_cast<int>(mu.size()); }

    double train_epoch(const Matrix& subset, Rng&) override {
        const std::size_t N = subset.rows();
        if (N == 0) throw UsageError("train_epoch: empty subset");
        if (subset.cols() != mu.size()) throw ConfigError("train_epoch: subset dimension mismatch");
        for (std::size_t j = 0; j < mu.size(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < N; ++i) s += subset(i, j);
            mu[j] = s / static_cast<double>(N);
        }
        double loss = 0.0;
        for (std::size_t i = 0; i < N; ++i)
            loss += 0.5 * squared_distance(subset.row(i), mu.data(), mu.size());
        return loss / static_cast<double>(N);
    }

    Matrix sample(int n, Rng&) const override {
        if (n < 0) throw ConfigError("sample: n must be nonnegative");
        Matrix out(static_cast<std::size_t>(n), mu.size());
        for (std::size_t b = 0; b < out.rows(); ++b)
            for (std::size_t j = 0; j < mu.size(); ++j) out(b, j) = mu[j];
        return out;
    }

    std::vector<double> mean_point() const override { return mu; }

    void save(std::ostream& os) const override {
        os.write("GMXM", 4);
        io::write_u32(os, 1u);
        io::write_u32(os, 1u);  // kind: degenerate vae
        io::write_u32(os, static_cast<std::uint32_t>(mu.size()));
        for (double v : mu) io::write_f64(os, v);
    }

    std::unique_ptr<GenerativeModel> clone() const override {
        return std::make_unique<DegenerateVae>(*this);
    }

    std::string kind() const override { return "degenerate_vae"; }
};

inline std::unique_ptr<GenerativeModel> load_model(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "GMXM", 4) != 0)
        throw ParseError("model blob: bad magic, expected GMXM");
    std::uint32_t version = io::read_u32(is);
    if (version != 1u) throw ParseError("model blob: unsupported version");
    std::uint32_t kind = io::read_u32(is);
    if (kind == 0u) {
        auto m = std::make_unique<GaussianVae>();
        m->dim = static_cast<int>(io::read_u32(is));
        m->latent = static_cast<int>(io::read_u32(is));
        m->sigma_dec2 = io::read_f64(is);
        m->batch_size = static_cast<int>(io::read_u32(is));
        AdamConfig cfg;
        cfg.lr = io::read_f64(is);
        cfg.beta1 = io::read_f64(is);
        cfg.beta2 = io::read_f64(is);
        cfg.eps = io::read_f64(is);
        MlpBlob enc = read_mlp(is);
        MlpBlob dec = read_mlp(is);
        m->enc_spec = std::move(enc.spec);
        m->enc_params = std::move(enc.params);
        m->dec_spec = std::move(dec.spec);
        m->dec_params = std::move(dec.params);
        m->enc_adam = make_adam_state(m->enc_params, cfg);
        m->dec_adam = make_adam_state(m->dec_params, cfg);
        if (m->enc_spec.input_dim() != m->dim || m->dec_spec.output_dim() != m->dim ||
            m->enc_spec.output_dim() != 2 * m->latent || m->dec_spec.input_dim() != m->latent)
            throw ParseError("model blob: inconsistent vae dimensions");
        return m;
    }
    if (kind == 1u) {
        auto d = static_cast<std::size_t>(io::read_u32(is));
        if (d < 1 || d > 1'000'000) throw ParseError("model blob: implausible dimension");
        std::vector<double> mu(d);
        for (auto& v : mu) v = io::read_f64(is);
        return std::make_unique<DegenerateVae>(std::move(mu));
    }
    throw ParseError("model blob: unknown model kind");
}

} // namespace genmix
