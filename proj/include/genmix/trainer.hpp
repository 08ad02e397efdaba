#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "genmix/common.hpp"
#include "genmix/data.hpp"
#include "genmix/discriminator.hpp"
#include "genmix/matrix.hpp"
#include "genmix/models.hpp"
#include "genmix/partition.hpp"
#include "genmix/rng.hpp"

namespace genmix {

// Stream tags: every rng consumer derives its own stream from
// (seed, tag, round, component), so results do not depend on the order in
// which components are processed.
namespace stream {
constexpr std::uint64_t dataset = 1;
constexpr std::uint64_t split = 2;
constexpr std::uint64_t init_assign = 3;
constexpr std::uint64_t model_init = 4;
constexpr std::uint64_t pretrain = 5;
constexpr std::uint64_t generator = 6;
constexpr std::uint64_t fake_sample = 7;
constexpr std::uint64_t real_subset = 8;
constexpr std::uint64_t disc_init = 9;
constexpr std::uint64_t disc_train = 10;
constexpr std::uint64_t eval_sample = 11;
constexpr std::uint64_t mixture_sample = 12;
constexpr std::uint64_t plot = 13;
} // namespace stream

enum class LikelihoodBackend { discriminator, nearest_centroid };
enum class ModelKind { gaussian_vae, degenerate_vae };
enum class InitScheme { uniform_iid, disjoint_blocks, centroids };

struct TrainConfig {
    std::size_t k = 3;
    int rounds = 10;            // competitive rounds after pretraining
    int pretrain_epochs = 5;
    int gen_epochs = 3;         // generator epochs per round
    int disc_epochs = 2;
    int batch_size = 32;
    AdamConfig gen_opt{0.005, 0.5, 0.999, 1e-8};
    AdamConfig disc_opt{0.005, 0.5, 0.999, 1e-8};
    std::size_t min_points = 0;  // 0 means max(1, ceil(n / (4k)))
    std::uint64_t seed = 1;
    LikelihoodBackend backend = LikelihoodBackend::discriminator;
    ModelKind model_kind = ModelKind::gaussian_vae;
    int latent_dim = 5;
    std::vector<int> gen_hidden{50, 50};
    std::vector<int> disc_hidden{50, 50};
    double sigma_dec2 = 1.0;
    ReinitPolicy reinit = ReinitPolicy::fresh_each_round;
    InitScheme init = InitScheme::uniform_iid;
    Matrix init_centroids;  // used when init == centroids
    int threads = 1;        // worker threads for per-component phases

    void validate(std::size_t n) const {
        if (k == 0) throw ConfigError("train: k must be positive");
        if (n < k) throw ConfigError("train: need at least one point per component");
        if (rounds < 0) throw ConfigError("train: rounds must be nonnegative");
        if (pretrain_epochs < 0 || gen_epochs < 0)
            throw ConfigError("train: epoch counts must be nonnegative");
        if (disc_epochs < 1) throw ConfigError("train: disc_epochs must be positive");
        if (batch_size < 1) throw ConfigError("train: batch_size must be positive");
        if (min_points > n) throw ConfigError("train: min_points exceeds dataset size");
        gen_opt.validate();
        disc_opt.validate();
        if (model_kind == ModelKind::gaussian_vae && latent_dim < 1)
            throw ConfigError("train: latent_dim must be positive");
        if (init == InitScheme::centroids) {
            if (init_centroids.rows() != k)
                throw ConfigError("train: init_centroids must have one row per component");
            if (model_kind != ModelKind::degenerate_vae)
                throw ConfigError("train: centroid init is only defined for the degenerate model");
        }
    }

    std::size_t effective_min_points(std::size_t n) const {
        if (min_points > 0) return min_points;
        std::size_t m = (n + 4 * k - 1) / (4 * k);
        return std::max<std::size_t>(1, m);
    }
};

// GENMIX_THREADS caps the worker count; unset or empty means no cap.
inline int effective_threads(int requested) {
    if (requested < 1) requested = 1;
    if (const char* env = std::getenv("GENMIX_THREADS")) {
        if (*env != '\0') {
            char* end = nullptr;
            long v = std::strtol(env, &end, 10);
            if (end == env || *end != '\0' || v < 1)
                throw ConfigError("GENMIX_THREADS must be a positive integer");
            requested = std::min<long>(requested, v);
        }
    }
    return requested;
}

// Runs fn(j) for j in [0, k), on up to `threads` workers. Work items must be
// independent; exceptions are collected and the first is rethrown.
inline void parallel_for_components(std::size_t k, int threads,
                                    const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || k <= 1) {
        for (std::size_t j = 0; j < k; ++j) fn(j);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error = nullptr;
    std::mutex err_mutex;
    auto worker = [&]() {
        while (true) {
            std::size_t j = next.fetch_add(1);
            if (j >= k) return;
            try {
                fn(j);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    auto nw = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(threads), k));
    pool.reserve(nw);
    for (std::size_t w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct MixtureState {
    std::vector<std::unique_ptr<GenerativeModel>> models;
    DiscriminatorEnsemble ensemble;
    Assignment assignment;
    std::vector<double> alpha;
    LikelihoodTable table;
    int rounds_completed = 0;
};

struct RoundRecord {
    int round = 0;                         // 1-based
    std::vector<std::size_t> subset_sizes; // training lists used this round
    std::vector<double> mean_losses;       // per-component generator loss
    std::vector<double> alpha;             // after this round's reassignment
    std::vector<int> diverged;             // 1 if the component was rolled back
    double wall_seconds = 0.0;
};

struct History {
    std::vector<double> pretrain_losses;
    double pretrain_wall_seconds = 0.0;
    std::vector<RoundRecord> rounds;
};

using RoundObserver = std::function<void(const MixtureState&, const History&)>;

// One component's training slice: `epochs` passes over its subset.
// Returns the mean loss of the final epoch.
inline double inner_train_step(GenerativeModel& model, const Matrix& subset, int epochs,
                               Rng& rng) {
    double loss = 0.0;
    for (int e = 0; e < epochs; ++e) loss = model.train_epoch(subset, rng);
    return loss;
}

inline LikelihoodTable uniform_table(std::size_t n, std::size_t k) {
    LikelihoodTable t;
    t.values.resize(n, k);
    t.values.fill(1.0 / static_cast<double>(n));
    t.normalizers.assign(k, 1.0);
    return t;
}

namespace detail {

inline std::unique_ptr<GenerativeModel> fresh_model(const TrainConfig& cfg, int dim,
                                                    std::size_t j) {
    if (cfg.model_kind == ModelKind::gaussian_vae) {
        Rng r = Rng::derive(cfg.seed, {stream::model_init, 0, j});
        return std::make_unique<GaussianVae>(dim, cfg.latent_dim, cfg.gen_hidden, cfg.gen_opt,
                                             cfg.sigma_dec2, cfg.batch_size, r);
    }
    if (cfg.init == InitScheme::centroids) {
        std::vector<double> mu(cfg.init_centroids.row(j), cfg.init_centroids.row(j) + dim);
        return std::make_unique<DegenerateVae>(std::move(mu));
    }
    return std::make_unique<DegenerateVae>(dim);
}

inline Assignment initial_assignment(const TrainConfig& cfg, const Matrix& data) {
    const std::size_t n = data.rows();
    switch (cfg.init) {
        case InitScheme::uniform_iid: {
            Rng r = Rng::derive(cfg.seed, {stream::init_assign});
            return uniform_init_split(n, cfg.k, r);
        }
        case InitScheme::disjoint_blocks: {
            Rng r = Rng::derive(cfg.seed, {stream::init_assign});
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            r.shuffle(idx);
            Assignment a;
            a.k = cfg.k;
            a.generation = 0;
            a.owner.resize(n);
            // contiguous chunks of the shuffled order, sizes differing by at most 1
            std::size_t base = n / cfg.k, extra = n % cfg.k;
            std::size_t pos = 0;
            for (std::size_t j = 0; j < cfg.k; ++j) {
                std::size_t sz = base + (j < extra ? 1 : 0);
                for (std::size_t i = 0; i < sz; ++i) a.owner[idx[pos++]] = j;
            }
            return a;
        }
        case InitScheme::centroids: {
            LikelihoodTable t = nearest_centroid_table(cfg.init_centroids, data);
            return assign(t, 0);
        }
    }
    throw ConfigError("train: unknown init scheme");
}

inline Matrix centroid_matrix(const std::vector<std::unique_ptr<GenerativeModel>>& models,
                              int dim) {
    Matrix c(models.size(), static_cast<std::size_t>(dim));
    for (std::size_t j = 0; j < models.size(); ++j) {
        auto mp = models[j]->mean_point();
        for (int d = 0; d < dim; ++d) c(j, static_cast<std::size_t>(d)) = mp[static_cast<std::size_t>(d)];
    }
    return c;
}

} // namespace detail

// The competitive training loop. Components pretrain on their initial
// slices, then each round (a) every component trains on the points it is
// currently responsible for, (b) per-component discriminators are trained
// real-vs-generated and their density ratios become per-point likelihood
// estimates, (c) points are reassigned winner-take-all and mixing weights
// are recounted. Per-component rng streams make the result independent of
// scheduling, so any thread count gives bit-identical output.
inline std::pair<MixtureState, History> run(const TrainConfig& cfg, const Matrix& data,
                                            const RoundObserver& observer = {}) {
    using clock = std::chrono::steady_clock;
    const std::size_t n = data.rows();
    const int dim = static_cast<int>(data.cols());
    cfg.validate(n);
    const std::size_t minp = cfg.effective_min_points(n);
    const int threads = effective_threads(cfg.threads);

    MixtureState st;
    st.models.reserve(cfg.k);
    for (std::size_t j = 0; j < cfg.k; ++j) st.models.push_back(detail::fresh_model(cfg, dim, j));
    st.ensemble = make_ensemble(cfg.k, dim, cfg.disc_hidden, cfg.disc_opt, cfg.reinit, cfg.seed);
    st.assignment = detail::initial_assignment(cfg, data);
    if (cfg.init == InitScheme::centroids)
        st.table = nearest_centroid_table(cfg.init_centroids, data);
    else
        st.table = uniform_table(n, cfg.k);
    st.alpha = mixing_weights(st.assignment);

    History hist;
    auto subsets = load_balance(st.assignment, st.table, minp);
    std::vector<Matrix> subset_data(cfg.k);
    auto materialize = [&]() {
        for (std::size_t j = 0; j < cfg.k; ++j) gather_rows(data, subsets[j], subset_data[j]);
    };
    materialize();

    // pretraining: every component fits its initial slice without competition
    {
        auto t0 = clock::now();
        hist.pretrain_losses.assign(cfg.k, 0.0);
        if (cfg.pretrain_epochs > 0) {
            parallel_for_components(cfg.k, threads, [&](std::size_t j) {
                Rng r = Rng::derive(cfg.seed, {stream::pretrain, 0, j});
                hist.pretrain_losses[j] =
                    inner_train_step(*st.models[j], subset_data[j], cfg.pretrain_epochs, r);
            });
        }
        hist.pretrain_wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    }
    if (observer) observer(st, hist);

    for (int t = 1; t <= cfg.rounds; ++t) {
        auto t0 = clock::now();
        auto tu = static_cast<std::uint64_t>(t);
        RoundRecord rec;
        rec.round = t;
        rec.subset_sizes.resize(cfg.k);
        for (std::size_t j = 0; j < cfg.k; ++j) rec.subset_sizes[j] = subsets[j].size();
        rec.mean_losses.assign(cfg.k, 0.0);
        rec.diverged.assign(cfg.k, 0);

        // snapshot for rollback if a component's update goes non-finite
        std::vector<std::unique_ptr<GenerativeModel>> snapshot;
        snapshot.reserve(cfg.k);
        for (const auto& m : st.models) snapshot.push_back(m->clone());

        parallel_for_components(cfg.k, threads, [&](std::size_t j) {
            Rng r = Rng::derive(cfg.seed, {stream::generator, tu, j});
            try {
                rec.mean_losses[j] =
                    inner_train_step(*st.models[j], subset_data[j], cfg.gen_epochs, r);
            } catch (const NumericError&) {
                st.models[j] = snapshot[j]->clone();
                rec.diverged[j] = 1;
                rec.mean_losses[j] = std::nan("");
            }
        });

        if (cfg.backend == LikelihoodBackend::discriminator) {
            parallel_for_components(cfg.k, threads, [&](std::size_t j) {
                const std::size_t nf = subsets[j].size();
                Rng fr = Rng::derive(cfg.seed, {stream::fake_sample, tu, j});
                Matrix fake = st.models[j]->sample(static_cast<int>(nf), fr);
                Rng rr = Rng::derive(cfg.seed, {stream::real_subset, tu, j});
                std::vector<std::size_t> idx(n);
                std::iota(idx.begin(), idx.end(), std::size_t{0});
                for (std::size_t i = 0; i < nf; ++i) {
                    std::size_t swap_at = i + static_cast<std::size_t>(rr.below(n - i));
                    std::swap(idx[i], idx[swap_at]);
                }
                idx.resize(nf);
                Matrix real;
                gather_rows(data, idx, real);
                if (st.ensemble.policy == ReinitPolicy::fresh_each_round) {
                    Rng ir = Rng::derive(cfg.seed, {stream::disc_init, tu, j});
                    st.ensemble.reinit_member(j, ir);
                }
                Rng dr = Rng::derive(cfg.seed, {stream::disc_train, tu, j});
                train_discriminator(st.ensemble.members[j], real, fake, cfg.disc_epochs,
                                    cfg.batch_size, dr);
            });
            st.table = likelihood_table(st.ensemble, data);
        } else {
            st.table = nearest_centroid_table(detail::centroid_matrix(st.models, dim), data);
        }

        st.assignment = assign(st.table, t);
        st.alpha = mixing_weights(st.assignment);
        st.rounds_completed = t;
        subsets = load_balance(st.assignment, st.table, minp);
        materialize();

        rec.alpha = st.alpha;
        rec.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
        hist.rounds.push_back(std::move(rec));
        if (observer) observer(st, hist);
    }
    return {std::move(st), std::move(hist)};
}

// Draws n points from the trained mixture: a weight-proportional component
// pick per point, then one model sample. With a single active component the
// categorical pick is skipped, so the rng stream matches that component's
// sample(n, rng) exactly.
inline Matrix sample_mixture(const MixtureState& st, int n, Rng& rng) {
    if (n < 0) throw ConfigError("sample_mixture: n must be nonnegative");
    if (st.models.empty()) throw UsageError("sample_mixture: no models");
    std::vector<std::size_t> active;
    double asum = 0.0;
    for (std::size_t j = 0; j < st.alpha.size(); ++j) {
        if (st.alpha[j] > 0.0) active.push_back(j);
        asum += st.alpha[j];
    }
    if (active.empty() || !(asum > 0.0))
        throw UsageError("sample_mixture: no component has positive weight");
    if (active.size() == 1) return st.models[active[0]]->sample(n, rng);

    std::vector<double> cum(st.alpha.size(), 0.0);
    double acc = 0.0;
    for (std::size_t j = 0; j < st.alpha.size(); ++j) {
        acc += st.alpha[j] / asum;
        cum[j] = acc;
    }
    cum.back() = 1.0;
    const auto dim = static_cast<std::size_t>(st.models[0]->data_dim());
    Matrix out(static_cast<std::size_t>(n), dim);
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        std::size_t j = 0;
        while (cum[j] <= u) ++j;
        Matrix row = st.models[j]->sample(1, rng);
        for (std::size_t c = 0; c < dim; ++c) out(static_cast<std::size_t>(i), c) = row(0, c);
    }
    return out;
}

} // namespace genmix
