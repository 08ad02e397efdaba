#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "genmix/eval.hpp"
#include "genmix/serialize.hpp"
#include "genmix/trainer.hpp"

using namespace genmix;
using Catch::Approx;

namespace {

Matrix three_blobs(std::size_t per, double spread, Rng& rng) {
    const double centers[3][2] = {{0.0, 0.0}, {6.0, 0.0}, {0.0, 6.0}};
    Matrix m(3 * per, 2);
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < per; ++i) {
            m(k * per + i, 0) = centers[k][0] + spread * rng.normal();
            m(k * per + i, 1) = centers[k][1] + spread * rng.normal();
        }
    return m;
}

std::string state_blob(const MixtureState& st) {
    std::ostringstream ss;
    for (const auto& m : st.models) m->save(ss);
    for (const auto& d : st.ensemble.members) write_mlp(ss, d.spec, d.params);
    for (std::size_t o : st.assignment.owner) ss << o << ',';
    for (double a : st.alpha) io::write_f64(ss, a);
    for (std::size_t i = 0; i < st.table.values.size(); ++i)
        io::write_f64(ss, st.table.values.data()[i]);
    return ss.str();
}

} // namespace

TEST_CASE("effective_min_points defaults to a quarter share", "[trainer]") {
    TrainConfig cfg;
    cfg.k = 3;
    REQUIRE(cfg.effective_min_points(100) == 9);   // ceil(100 / 12)
    REQUIRE(cfg.effective_min_points(12) == 1);
    REQUIRE(cfg.effective_min_points(1) == 1);
    cfg.min_points = 17;
    REQUIRE(cfg.effective_min_points(100) == 17);
}

TEST_CASE("GENMIX_THREADS caps the worker count", "[trainer]") {
    unsetenv("GENMIX_THREADS");
    REQUIRE(effective_threads(4) == 4);
    REQUIRE(effective_threads(0) == 1);
    setenv("GENMIX_THREADS", "2", 1);
    REQUIRE(effective_threads(8) == 2);
    REQUIRE(effective_threads(1) == 1);
    setenv("GENMIX_THREADS", "", 1);
    REQUIRE(effective_threads(8) == 8);  // empty means no cap
    setenv("GENMIX_THREADS", "abc", 1);
    REQUIRE_THROWS_AS(effective_threads(4), ConfigError);
    setenv("GENMIX_THREADS", "0", 1);
    REQUIRE_THROWS_AS(effective_threads(4), ConfigError);
    unsetenv("GENMIX_THREADS");
}

TEST_CASE("parallel_for_components visits every index once", "[trainer]") {
    for (int threads : {1, 3, 8}) {
        std::vector<int> hits(5, 0);
        parallel_for_components(5, threads, [&](std::size_t j) { hits[j]++; });
        REQUIRE(hits == std::vector<int>{1, 1, 1, 1, 1});
    }
    REQUIRE_THROWS_AS(parallel_for_components(
                          4, 4, [](std::size_t j) { if (j == 2) throw NumericError("boom"); }),
                      NumericError);
}

TEST_CASE("uniform_table is flat and unit-normalized", "[trainer]") {
    LikelihoodTable t = uniform_table(4, 2);
    REQUIRE(t.values.rows() == 4);
    for (std::size_t i = 0; i < t.values.size(); ++i)
        REQUIRE(t.values.data()[i] == Approx(0.25));
    REQUIRE_NOTHROW(validate_column_stochastic(t));
}

TEST_CASE("single component training tracks the data mean", "[trainer]") {
    Rng rng(3);
    Matrix data = three_blobs(20, 0.4, rng);
    TrainConfig cfg;
    cfg.k = 1;
    cfg.rounds = 3;
    cfg.pretrain_epochs = 1;
    cfg.gen_epochs = 1;
    cfg.disc_epochs = 1;
    cfg.model_kind = ModelKind::degenerate_vae;
    cfg.backend = LikelihoodBackend::nearest_centroid;
    cfg.seed = 5;

    auto [st, hist] = run(cfg, data);
    REQUIRE(st.alpha == std::vector<double>{1.0});
    REQUIRE(st.rounds_completed == 3);
    REQUIRE(hist.rounds.size() == 3);
    REQUIRE(st.assignment.generation == 3);
    for (std::size_t o : st.assignment.owner) REQUIRE(o == 0);

    std::vector<double> mu = st.models[0]->mean_point();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        mx += data(i, 0);
        my += data(i, 1);
    }
    mx /= static_cast<double>(data.rows());
    my /= static_cast<double>(data.rows());
    REQUIRE(mu[0] == Approx(mx).margin(1e-12));
    REQUIRE(mu[1] == Approx(my).margin(1e-12));
}

TEST_CASE("degenerate model with centroid table reproduces batch k-means", "[trainer]") {
    Rng rng(11);
    Matrix data = three_blobs(20, 0.5, rng);
    Matrix init(3, 2);
    init(0, 0) = 1.0;
    init(0, 1) = 1.0;
    init(1, 0) = 5.0;
    init(1, 1) = 1.0;
    init(2, 0) = 1.0;
    init(2, 1) = 5.0;

    TrainConfig cfg;
    cfg.k = 3;
    cfg.rounds = 10;
    cfg.pretrain_epochs = 0;
    cfg.gen_epochs = 1;
    cfg.disc_epochs = 1;
    cfg.min_points = 1;
    cfg.model_kind = ModelKind::degenerate_vae;
    cfg.backend = LikelihoodBackend::nearest_centroid;
    cfg.init = InitScheme::centroids;
    cfg.init_centroids = init;
    cfg.seed = 1;

    auto [st, hist] = run(cfg, data);
    // no component ever starved, so the augmentation path stayed inactive
    for (const auto& rec : hist.rounds)
        for (double a : rec.alpha) REQUIRE(a > 0.0);

    LloydResult lr = lloyd(data, init, 1000);
    REQUIRE(lr.iterations <= 10);
    REQUIRE(st.assignment.owner == lr.assignment);
    for (std::size_t j = 0; j < 3; ++j) {
        std::vector<double> mu = st.models[j]->mean_point();
        REQUIRE(mu[0] == Approx(lr.centroids(j, 0)).margin(1e-12));
        REQUIRE(mu[1] == Approx(lr.centroids(j, 1)).margin(1e-12));
    }
}

TEST_CASE("a component whose update blows up is rolled back", "[trainer]") {
    Rng rng(7);
    Matrix data = three_blobs(12, 0.4, rng);
    TrainConfig cfg;
    cfg.k = 2;
    cfg.rounds = 1;
    cfg.pretrain_epochs = 0;
    cfg.gen_epochs = 3;
    cfg.disc_epochs = 1;
    cfg.batch_size = 16;
    cfg.latent_dim = 2;
    cfg.gen_hidden = {6};
    cfg.gen_opt.lr = 1e160;  // guarantees a non-finite loss within an epoch
    cfg.backend = LikelihoodBackend::nearest_centroid;
    cfg.seed = 9;

    auto [st, hist] = run(cfg, data);
    REQUIRE(hist.rounds.size() == 1);
    for (std::size_t j = 0; j < 2; ++j) {
        REQUIRE(hist.rounds[0].diverged[j] == 1);
        REQUIRE(std::isnan(hist.rounds[0].mean_losses[j]));
        // restored parameters still produce finite outputs
        for (double v : st.models[j]->mean_point()) REQUIRE(std::isfinite(v));
    }
    double asum = 0.0;
    for (double a : st.alpha) asum += a;
    REQUIRE(asum == Approx(1.0).margin(1e-12));
}

TEST_CASE("thread count does not change the result", "[trainer]") {
    Rng rng(21);
    Matrix data = three_blobs(40, 0.5, rng);

    TrainConfig cfg;
    cfg.k = 3;
    cfg.rounds = 2;
    cfg.pretrain_epochs = 1;
    cfg.gen_epochs = 1;
    cfg.disc_epochs = 1;
    cfg.batch_size = 16;
    cfg.latent_dim = 2;
    cfg.gen_hidden = {8};
    cfg.disc_hidden = {8};
    cfg.seed = 31;

    unsetenv("GENMIX_THREADS");
    cfg.threads = 1;
    auto [serial, hist1] = run(cfg, data);
    cfg.threads = 4;
    auto [parallel, hist2] = run(cfg, data);

    REQUIRE(state_blob(serial) == state_blob(parallel));
    REQUIRE(hist1.pretrain_losses == hist2.pretrain_losses);
    REQUIRE(hist1.rounds.size() == hist2.rounds.size());
    for (std::size_t t = 0; t < hist1.rounds.size(); ++t) {
        REQUIRE(hist1.rounds[t].mean_losses == hist2.rounds[t].mean_losses);
        REQUIRE(hist1.rounds[t].alpha == hist2.rounds[t].alpha);
        REQUIRE(hist1.rounds[t].subset_sizes == hist2.rounds[t].subset_sizes);
    }
}

TEST_CASE("a zero-weight component is rescued by the training floor", "[trainer]") {
    // both clusters start nearer to the first centroid, so the second
    // component owns nothing at round zero; the floor still hands it its
    // best-scoring points and one round later it owns a full cluster
    Matrix data(60, 1);
    Rng rng(13);
    for (std::size_t i = 0; i < 30; ++i) data(i, 0) = 0.0 + 0.05 * rng.normal();
    for (std::size_t i = 30; i < 60; ++i) data(i, 0) = 10.0 + 0.05 * rng.normal();
    Matrix init(2, 1);
    init(0, 0) = 0.1;
    init(1, 0) = 25.0;  // near enough that its softmax column stays above zero

    TrainConfig cfg;
    cfg.k = 2;
    cfg.rounds = 5;
    cfg.pretrain_epochs = 0;
    cfg.gen_epochs = 1;
    cfg.disc_epochs = 1;
    cfg.min_points = 5;
    cfg.model_kind = ModelKind::degenerate_vae;
    cfg.backend = LikelihoodBackend::nearest_centroid;
    cfg.init = InitScheme::centroids;
    cfg.init_centroids = init;
    cfg.seed = 2;

    std::vector<std::vector<double>> alphas;  // index 0 is the initial state
    auto [st, hist] = run(cfg, data, [&](const MixtureState& s, const History&) {
        alphas.push_back(s.alpha);
    });
    REQUIRE(alphas.size() == 6);
    REQUIRE(alphas[0] == std::vector<double>{1.0, 0.0});  // starved at the start
    REQUIRE(alphas[1][1] > 0.0);                          // rescued within one round
    REQUIRE(st.alpha[1] == Approx(0.5).margin(1e-12));
    REQUIRE(st.models[1]->mean_point()[0] == Approx(10.0).margin(0.2));
}

TEST_CASE("round zero runs and subset sizes respect the floor", "[trainer]") {
    Rng rng(17);
    Matrix data = three_blobs(20, 0.5, rng);
    TrainConfig cfg;
    cfg.k = 3;
    cfg.rounds = 0;
    cfg.pretrain_epochs = 2;
    cfg.model_kind = ModelKind::degenerate_vae;
    cfg.init = InitScheme::disjoint_blocks;
    cfg.seed = 4;

    int observer_calls = 0;
    auto [st, hist] = run(cfg, data, [&](const MixtureState&, const History& h) {
        observer_calls++;
        REQUIRE(h.rounds.empty());
    });
    REQUIRE(observer_calls == 1);
    REQUIRE(st.rounds_completed == 0);
    REQUIRE(hist.rounds.empty());
    // disjoint blocks make thirds exactly
    for (double a : st.alpha) REQUIRE(a == Approx(1.0 / 3.0).margin(1e-12));
}

TEST_CASE("history records one entry per round with coherent fields", "[trainer]") {
    Rng rng(19);
    Matrix data = three_blobs(15, 0.5, rng);
    TrainConfig cfg;
    cfg.k = 2;
    cfg.rounds = 3;
    cfg.pretrain_epochs = 1;
    cfg.gen_epochs = 1;
    cfg.disc_epochs = 1;
    cfg.batch_size = 16;
    cfg.latent_dim = 2;
    cfg.gen_hidden = {6};
    cfg.disc_hidden = {6};
    cfg.seed = 23;

    auto [st, hist] = run(cfg, data);
    REQUIRE(hist.rounds.size() == 3);
    const std::size_t n = data.rows();
    for (std::size_t t = 0; t < 3; ++t) {
        const RoundRecord& rec = hist.rounds[t];
        REQUIRE(rec.round == static_cast<int>(t) + 1);
        std::size_t covered = 0;
        for (std::size_t s : rec.subset_sizes) {
            REQUIRE(s >= cfg.effective_min_points(n));
            covered += s;
        }
        REQUIRE(covered >= n);
        double asum = 0.0;
        for (double a : rec.alpha) asum += a;
        REQUIRE(asum == Approx(1.0).margin(1e-12));
        REQUIRE(rec.wall_seconds >= 0.0);
    }
    REQUIRE(st.assignment.generation == 3);
    REQUIRE_NOTHROW(validate_column_stochastic(st.table));
}

TEST_CASE("discriminators persist or reset according to policy", "[trainer]") {
    Rng rng(29);
    Matrix data = three_blobs(15, 0.5, rng);
    TrainConfig base;
    base.k = 2;
    base.rounds = 2;
    base.pretrain_epochs = 1;
    base.gen_epochs = 1;
    base.disc_epochs = 1;
    base.batch_size = 16;
    base.latent_dim = 2;
    base.gen_hidden = {6};
    base.disc_hidden = {6};
    base.seed = 37;

    TrainConfig fresh = base;
    fresh.reinit = ReinitPolicy::fresh_each_round;
    TrainConfig keep = base;
    keep.reinit = ReinitPolicy::persistent;

    auto [st_fresh, h1] = run(fresh, data);
    auto [st_keep, h2] = run(keep, data);
    // the persistent ensemble accumulates optimizer steps across rounds
    REQUIRE(st_keep.ensemble.members[0].adam.t > st_fresh.ensemble.members[0].adam.t);
    std::ostringstream a, b;
    write_mlp(a, st_fresh.ensemble.members[0].spec, st_fresh.ensemble.members[0].params);
    write_mlp(b, st_keep.ensemble.members[0].spec, st_keep.ensemble.members[0].params);
    REQUIRE(a.str() != b.str());
}

TEST_CASE("sample_mixture draws from components by weight", "[trainer]") {
    MixtureState st;
    st.models.push_back(std::make_unique<DegenerateVae>(std::vector<double>{0.0, 0.0}));
    st.models.push_back(std::make_unique<DegenerateVae>(std::vector<double>{5.0, 5.0}));
    st.alpha = {0.5, 0.5};
    Rng rng(41);
    Matrix s = sample_mixture(st, 10000, rng);
    std::size_t first = 0;
    for (std::size_t i = 0; i < s.rows(); ++i) {
        bool is_first = s(i, 0) == 0.0 && s(i, 1) == 0.0;
        bool is_second = s(i, 0) == 5.0 && s(i, 1) == 5.0;
        REQUIRE((is_first || is_second));
        first += is_first;
    }
    // binomial 3 sigma band around 5000
    REQUIRE(std::fabs(static_cast<double>(first) - 5000.0) <= 150.0);

    st.alpha = {1.0, 0.0};
    Rng rng2(43);
    Matrix only = sample_mixture(st, 50, rng2);
    for (std::size_t i = 0; i < only.rows(); ++i) REQUIRE(only(i, 0) == 0.0);

    st.alpha = {0.0, 0.0};
    Rng rng3(47);
    REQUIRE_THROWS_AS(sample_mixture(st, 5, rng3), UsageError);
    st.alpha = {0.5, 0.5};
    REQUIRE_THROWS_AS(sample_mixture(st, -1, rng3), ConfigError);
    REQUIRE_THROWS_AS(sample_mixture(MixtureState{}, 5, rng3), UsageError);
}

TEST_CASE("one active component uses its sample stream verbatim", "[trainer]") {
    Rng init(53);
    auto vae = std::make_unique<GaussianVae>(2, 2, std::vector<int>{6}, AdamConfig{}, 1.0, 16,
                                             init);
    MixtureState st;
    st.models.push_back(vae->clone());
    st.alpha = {1.0};
    Rng a(61), b(61);
    Matrix via_mixture = sample_mixture(st, 9, a);
    Matrix direct = vae->sample(9, b);
    REQUIRE(via_mixture == direct);
}

TEST_CASE("config validation catches contradictions", "[trainer]") {
    TrainConfig cfg;
    cfg.k = 0;
    REQUIRE_THROWS_AS(cfg.validate(10), ConfigError);
    cfg = TrainConfig{};
    REQUIRE_THROWS_AS(cfg.validate(2), ConfigError);  // n < k
    cfg = TrainConfig{};
    cfg.init = InitScheme::centroids;
    cfg.init_centroids.resize(3, 2);
    cfg.model_kind = ModelKind::gaussian_vae;
    REQUIRE_THROWS_AS(cfg.validate(100), ConfigError);
    cfg.model_kind = ModelKind::degenerate_vae;
    REQUIRE_NOTHROW(cfg.validate(100));
    cfg = TrainConfig{};
    cfg.disc_epochs = 0;
    REQUIRE_THROWS_AS(cfg.validate(100), ConfigError);
    cfg = TrainConfig{};
    cfg.latent_dim = 0;
    REQUIRE_THROWS_AS(cfg.validate(100), ConfigError);
}
