#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "genmix/checkpoint.hpp"
#include "genmix/common.hpp"
#include "genmix/data.hpp"
#include "genmix/eval.hpp"
#include "genmix/svg.hpp"
#include "genmix/trainer.hpp"

namespace genmix {

struct EvalSettings {
    double holdout_fraction = 0.2;
    int kde_total_samples = 6000;  // same for every run so bandwidths are comparable
};

enum class BaselineKind { kvae, bag, single_large };

inline const char* baseline_name(BaselineKind b) {
    switch (b) {
        case BaselineKind::kvae: return "kvae";
        case BaselineKind::bag: return "bag";
        case BaselineKind::single_large: return "single_large";
    }
    return "?";
}

struct ExperimentConfig {
    std::string name;
    BaselineKind baseline = BaselineKind::kvae;
    // data source: either a bundled mode layout (+ n) or an external csv
    int modes = 0;  // 0 when custom means or an external file is used
    Matrix custom_means;
    double sigma2 = 0.25;
    bool skew = true;
    std::size_t n_points = 8000;
    std::string dataset_path;  // when nonempty, load instead of generating
    TrainConfig train;
    EvalSettings eval;
    std::string out_dir;
    int plot_every = 0;  // 0 means plot only after pretraining and at the end

    std::string run_id() const { return name + "_seed" + std::to_string(train.seed); }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& obj, const std::string& where,
                                std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ConfigError("config: unknown key '" + where + key + "'");
    }
}

template <typename T>
T get_field(const json& obj, const std::string& where, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: field '" + where + key + "' has the wrong type");
    }
}

template <typename T>
T require_field(const json& obj, const std::string& where, const char* key) {
    if (!obj.contains(key)) throw ConfigError("config: missing field '" + where + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: field '" + where + key + "' has the wrong type");
    }
}

} // namespace detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& js) {
    using detail::get_field;
    using detail::require_field;
    ExperimentConfig cfg;
    detail::reject_unknown_keys(js, "", {"name", "baseline", "data", "train", "eval", "out_dir",
                                         "plot_every"});
    cfg.name = require_field<std::string>(js, "", "name");
    if (cfg.name.empty()) throw ConfigError("config: 'name' must be nonempty");
    {
        std::string b = get_field<std::string>(js, "", "baseline", "kvae");
        if (b == "kvae")
            cfg.baseline = BaselineKind::kvae;
        else if (b == "bag")
            cfg.baseline = BaselineKind::bag;
        else if (b == "single_large")
            cfg.baseline = BaselineKind::single_large;
        else
            throw ConfigError("config: baseline must be kvae, bag, or single_large");
    }

    if (!js.contains("data")) throw ConfigError("config: missing 'data' section");
    const auto& jd = js.at("data");
    detail::reject_unknown_keys(jd, "data.", {"modes", "means", "sigma2", "skew", "n", "path"});
    cfg.dataset_path = get_field<std::string>(jd, "data.", "path", "");
    cfg.sigma2 = get_field<double>(jd, "data.", "sigma2", 0.25);
    cfg.skew = get_field<bool>(jd, "data.", "skew", true);
    cfg.n_points = get_field<std::size_t>(jd, "data.", "n", 8000);
    if (jd.contains("means")) {
        auto rows = require_field<std::vector<std::vector<double>>>(jd, "data.", "means");
        if (rows.empty() || rows[0].empty())
            throw ConfigError("config: data.means must be a nonempty matrix");
        cfg.custom_means.resize(rows.size(), rows[0].size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows[0].size())
                throw ConfigError("config: data.means rows must have equal length");
            for (std::size_t c = 0; c < rows[i].size(); ++c) cfg.custom_means(i, c) = rows[i][c];
        }
    } else if (cfg.dataset_path.empty()) {
        cfg.modes = require_field<int>(jd, "data.", "modes");
    }

    const auto jt = js.contains("train") ? js.at("train") : nlohmann::json::object();
    detail::reject_unknown_keys(
        jt, "train.",
        {"k", "rounds", "pretrain_epochs", "gen_epochs", "disc_epochs", "batch_size", "gen_lr",
         "gen_beta1", "gen_beta2", "gen_eps", "disc_lr", "disc_beta1", "disc_beta2", "disc_eps",
         "latent_dim", "gen_hidden", "disc_hidden", "min_points", "seed", "backend", "model",
         "reinit", "threads", "sigma_dec2"});
    TrainConfig& t = cfg.train;
    t.k = get_field<std::size_t>(jt, "train.", "k", 3);
    t.rounds = get_field<int>(jt, "train.", "rounds", 10);
    t.pretrain_epochs = get_field<int>(jt, "train.", "pretrain_epochs", 5);
    t.gen_epochs = get_field<int>(jt, "train.", "gen_epochs", 3);
    t.disc_epochs = get_field<int>(jt, "train.", "disc_epochs", 2);
    t.batch_size = get_field<int>(jt, "train.", "batch_size", 32);
    t.gen_opt.lr = get_field<double>(jt, "train.", "gen_lr", 0.005);
    t.gen_opt.beta1 = get_field<double>(jt, "train.", "gen_beta1", 0.5);
    t.gen_opt.beta2 = get_field<double>(jt, "train.", "gen_beta2", 0.999);
    t.gen_opt.eps = get_field<double>(jt, "train.", "gen_eps", 1e-8);
    t.disc_opt.lr = get_field<double>(jt, "train.", "disc_lr", 0.005);
    t.disc_opt.beta1 = get_field<double>(jt, "train.", "disc_beta1", 0.5);
    t.disc_opt.beta2 = get_field<double>(jt, "train.", "disc_beta2", 0.999);
    t.disc_opt.eps = get_field<double>(jt, "train.", "disc_eps", 1e-8);
    t.latent_dim = get_field<int>(jt, "train.", "latent_dim", 5);
    t.gen_hidden = get_field<std::vector<int>>(jt, "train.", "gen_hidden", {50, 50});
    t.disc_hidden = get_field<std::vector<int>>(jt, "train.", "disc_hidden", {50, 50});
    t.min_points = get_field<std::size_t>(jt, "train.", "min_points", 0);
    t.seed = get_field<std::uint64_t>(jt, "train.", "seed", 1);
    t.sigma_dec2 = get_field<double>(jt, "train.", "sigma_dec2", 1.0);
    t.threads = get_field<int>(jt, "train.", "threads", 1);
    {
        std::string b = get_field<std::string>(jt, "train.", "backend", "discriminator");
        if (b == "discriminator")
            t.backend = LikelihoodBackend::discriminator;
        else if (b == "nearest_centroid")
            t.backend = LikelihoodBackend::nearest_centroid;
        else
            throw ConfigError("config: train.backend must be discriminator or nearest_centroid");
        std::string m = get_field<std::string>(jt, "train.", "model", "gaussian_vae");
        if (m == "gaussian_vae")
            t.model_kind = ModelKind::gaussian_vae;
        else if (m == "degenerate_vae")
            t.model_kind = ModelKind::degenerate_vae;
        else
            throw ConfigError("config: train.model must be gaussian_vae or degenerate_vae");
        std::string r = get_field<std::string>(jt, "train.", "reinit", "fresh_each_round");
        if (r == "fresh_each_round")
            t.reinit = ReinitPolicy::fresh_each_round;
        else if (r == "persistent")
            t.reinit = ReinitPolicy::persistent;
        else
            throw ConfigError("config: train.reinit must be fresh_each_round or persistent");
    }

    const auto je = js.contains("eval") ? js.at("eval") : nlohmann::json::object();
    detail::reject_unknown_keys(je, "eval.", {"holdout_fraction", "kde_total_samples"});
    cfg.eval.holdout_fraction = get_field<double>(je, "eval.", "holdout_fraction", 0.2);
    cfg.eval.kde_total_samples = get_field<int>(je, "eval.", "kde_total_samples", 6000);
    if (cfg.eval.kde_total_samples < 2)
        throw ConfigError("config: eval.kde_total_samples must be at least 2");

    cfg.out_dir = get_field<std::string>(js, "", "out_dir", "runs/" + cfg.name);
    cfg.plot_every = get_field<int>(js, "", "plot_every", 0);

    // structural constraints the baselines imply
    if (cfg.baseline == BaselineKind::bag) {
        cfg.train.rounds = 0;
        cfg.train.init = InitScheme::disjoint_blocks;
    } else if (cfg.baseline == BaselineKind::single_large) {
        cfg.train.k = 1;
        cfg.train.rounds = 0;
    }
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    nlohmann::json js;
    try {
        f >> js;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("config: invalid json in " + path + ": " + e.what());
    }
    return parse_experiment_config(js);
}

// Canonical resolved form, also what gets fingerprinted into config_hash.
inline nlohmann::json resolved_config_json(const ExperimentConfig& c) {
    nlohmann::json js;
    js["name"] = c.name;
    js["baseline"] = baseline_name(c.baseline);
    js["data"]["modes"] = c.modes;
    js["data"]["sigma2"] = c.sigma2;
    js["data"]["skew"] = c.skew;
    js["data"]["n"] = c.n_points;
    js["data"]["path"] = c.dataset_path;
    if (c.custom_means.rows() > 0) {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < c.custom_means.rows(); ++i)
            rows.emplace_back(c.custom_means.row(i), c.custom_means.row(i) + c.custom_means.cols());
        js["data"]["means"] = rows;
    }
    const TrainConfig& t = c.train;
    js["train"] = {{"k", t.k},
                   {"rounds", t.rounds},
                   {"pretrain_epochs", t.pretrain_epochs},
                   {"gen_epochs", t.gen_epochs},
                   {"disc_epochs", t.disc_epochs},
                   {"batch_size", t.batch_size},
                   {"gen_lr", t.gen_opt.lr},
                   {"gen_beta1", t.gen_opt.beta1},
                   {"gen_beta2", t.gen_opt.beta2},
                   {"gen_eps", t.gen_opt.eps},
                   {"disc_lr", t.disc_opt.lr},
                   {"disc_beta1", t.disc_opt.beta1},
                   {"disc_beta2", t.disc_opt.beta2},
                   {"disc_eps", t.disc_opt.eps},
                   {"latent_dim", t.latent_dim},
                   {"gen_hidden", t.gen_hidden},
                   {"disc_hidden", t.disc_hidden},
                   {"min_points", t.min_points},
                   {"seed", t.seed},
                   {"sigma_dec2", t.sigma_dec2},
                   {"backend", t.backend == LikelihoodBackend::discriminator ? "discriminator"
                                                                             : "nearest_centroid"},
                   {"model", t.model_kind == ModelKind::gaussian_vae ? "gaussian_vae"
                                                                     : "degenerate_vae"},
                   {"reinit", t.reinit == ReinitPolicy::fresh_each_round ? "fresh_each_round"
                                                                         : "persistent"},
                   {"threads", t.threads}};
    js["eval"] = {{"holdout_fraction", c.eval.holdout_fraction},
                  {"kde_total_samples", c.eval.kde_total_samples}};
    js["out_dir"] = c.out_dir;
    js["plot_every"] = c.plot_every;
    return js;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct ExperimentResult {
    double kde_loglik = 0.0;
    double kde_bandwidth = 0.0;
    double purity = -1.0;  // negative when labels were unavailable
    double ari = 0.0;
    std::vector<double> alpha;
    int rounds_completed = 0;
};

namespace detail {

inline void write_metrics_csv(const std::filesystem::path& path, const std::string& run_id,
                              const ExperimentResult& r) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("metrics: cannot open " + path.string());
    f << "run_id,round,metric,value\n";
    char buf[64];
    auto row = [&](const std::string& metric, double value) {
        std::snprintf(buf, sizeof buf, "%.17g", value);
        f << run_id << ',' << r.rounds_completed << ',' << metric << ',' << buf << '\n';
    };
    row("kde_loglik", r.kde_loglik);
    row("kde_bandwidth", r.kde_bandwidth);
    if (r.purity >= 0.0) {
        row("purity", r.purity);
        row("ari", r.ari);
    }
    for (std::size_t j = 0; j < r.alpha.size(); ++j)
        row("alpha_" + std::to_string(j), r.alpha[j]);
}

inline void write_history_csv(const std::filesystem::path& path, const History& h) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("history: cannot open " + path.string());
    f << "round,component,subset_size,mean_loss,alpha,diverged\n";
    char buf[64];
    for (std::size_t j = 0; j < h.pretrain_losses.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", h.pretrain_losses[j]);
        f << "0," << j << ",," << buf << ",,0\n";
    }
    for (const auto& r : h.rounds)
        for (std::size_t j = 0; j < r.mean_losses.size(); ++j) {
            f << r.round << ',' << j << ',' << r.subset_sizes[j] << ',';
            std::snprintf(buf, sizeof buf, "%.17g", r.mean_losses[j]);
            f << buf << ',';
            std::snprintf(buf, sizeof buf, "%.17g", r.alpha[j]);
            f << buf << ',' << r.diverged[j] << '\n';
        }
}

inline void write_timings_csv(const std::filesystem::path& path, const History& h) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("timings: cannot open " + path.string());
    f << "phase,round,seconds\n";
    f << "pretrain,0," << h.pretrain_wall_seconds << '\n';
    for (const auto& r : h.rounds) f << "round," << r.round << ',' << r.wall_seconds << '\n';
}

inline void write_plot(const std::filesystem::path& path, const Matrix& data,
                       const MixtureState& st, std::uint64_t seed, int round) {
    std::vector<ScatterGroup> groups;
    {
        ScatterGroup g;
        std::size_t keep = std::min<std::size_t>(data.rows(), 3000);
        g.points.resize(keep, data.cols());
        for (std::size_t i = 0; i < keep; ++i)
            for (std::size_t c = 0; c < data.cols(); ++c) g.points(i, c) = data(i, c);
        g.color = "#bbbbbb";
        g.radius = 1.5;
        g.opacity = 0.5;
        groups.push_back(std::move(g));
    }
    for (std::size_t j = 0; j < st.models.size(); ++j) {
        Rng r = Rng::derive(seed, {stream::plot, static_cast<std::uint64_t>(round), j});
        ScatterGroup g;
        g.points = st.models[j]->sample(400, r);
        g.color = component_color(j);
        g.radius = 1.8;
        g.opacity = 0.75;
        groups.push_back(std::move(g));
    }
    svg_scatter(path.string(), groups, "round " + std::to_string(round));
}

} // namespace detail

struct PreparedData {
    Dataset all, train, held;
};

// Dataset acquisition and the train/eval split, both derived from the run
// seed so a seed fully determines the trial.
inline PreparedData prepare_data(const ExperimentConfig& cfg) {
    PreparedData d;
    if (!cfg.dataset_path.empty()) {
        d.all = load_csv_file(cfg.dataset_path);
    } else {
        GmmSpec g;
        if (cfg.custom_means.rows() > 0) {
            g.means = cfg.custom_means;
        } else {
            g = preset_modes(cfg.modes);
        }
        g.sigma2 = cfg.sigma2;
        g.skew = cfg.skew;
        Rng r = Rng::derive(cfg.train.seed, {stream::dataset});
        d.all = generate_synthetic(g, cfg.n_points, r);
    }
    Rng r = Rng::derive(cfg.train.seed, {stream::split});
    holdout_split(d.all, cfg.eval.holdout_fraction, r, d.train, d.held);
    return d;
}

// Headline numbers for a trained mixture: held-out KDE log likelihood plus
// clustering quality when ground-truth labels exist.
inline ExperimentResult evaluate_mixture(const ExperimentConfig& cfg, const MixtureState& state,
                                         const PreparedData& data) {
    ExperimentResult res;
    res.rounds_completed = state.rounds_completed;
    res.alpha = state.alpha;
    {
        Rng r = Rng::derive(cfg.train.seed, {stream::eval_sample});
        Matrix samples = sample_mixture(state, cfg.eval.kde_total_samples, r);
        res.kde_bandwidth = scott_bandwidth(samples);
        res.kde_loglik = kde_log_likelihood(samples, data.held.points, res.kde_bandwidth);
    }
    if (data.train.has_labels()) {
        ClusterMetrics cm = cluster_metrics(state.assignment.owner, data.train.labels);
        res.purity = cm.purity;
        res.ari = cm.ari;
    }
    return res;
}

// Full pipeline without touching the filesystem.
inline ExperimentResult run_in_memory(const ExperimentConfig& cfg) {
    PreparedData data = prepare_data(cfg);
    cfg.train.validate(data.train.points.rows());
    auto [state, history] = run(cfg.train, data.train.points);
    return evaluate_mixture(cfg, state, data);
}

// Builds (or loads) the dataset, runs the configured training, evaluates the
// resulting mixture against the held-out points, and writes the run
// directory. Returns the headline numbers.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, bool dry_run = false,
                                       std::ostream* log = nullptr) {
    namespace fs = std::filesystem;

    PreparedData data = prepare_data(cfg);
    Dataset& all = data.all;
    Dataset& train = data.train;
    cfg.train.validate(train.points.rows());
    if (dry_run) {
        if (log) *log << "config ok: " << cfg.run_id() << " (dry run, nothing written)\n";
        return {};
    }

    fs::path out(cfg.out_dir);
    fs::create_directories(out / "plots");
    std::string config_hash;
    {
        std::string dump = resolved_config_json(cfg).dump(2);
        config_hash = hex64(fnv1a64(dump));
        std::ofstream f(out / "config.json", std::ios::binary);
        if (!f) throw ParseError("run: cannot write config.json");
        f << dump << '\n';
    }
    save_csv_file((out / "dataset.csv").string(), all);
    std::string dataset_hash;
    {
        std::ostringstream ss;
        save_csv(ss, all);
        dataset_hash = hex64(fnv1a64(ss.str()));
    }
    {
        nlohmann::json mj;
        mj["run_id"] = cfg.run_id();
        mj["config_hash"] = config_hash;
        mj["dataset_hash"] = dataset_hash;
        mj["n_train"] = train.points.rows();
        mj["n_eval"] = data.held.points.rows();
        std::ofstream f(out / "manifest.json", std::ios::binary);
        f << mj.dump(2) << '\n';
    }

    RoundObserver observer = [&](const MixtureState& st, const History& h) {
        int round = static_cast<int>(h.rounds.size() == 0 ? 0 : h.rounds.back().round);
        write_checkpoint(out, round, st, config_hash);
        bool is_last = round == cfg.train.rounds;
        bool plot_now = round == 0 || is_last ||
                        (cfg.plot_every > 0 && round % cfg.plot_every == 0);
        if (plot_now)
            detail::write_plot(out / "plots" / ("round_" + std::to_string(round) + ".svg"),
                               train.points, st, cfg.train.seed, round);
        if (log) {
            *log << "round " << std::setw(3) << round << "  alpha [";
            for (std::size_t j = 0; j < st.alpha.size(); ++j)
                *log << (j ? " " : "") << std::fixed << std::setprecision(3) << st.alpha[j];
            *log << "]";
            if (!h.rounds.empty()) {
                *log << "  loss [";
                for (std::size_t j = 0; j < h.rounds.back().mean_losses.size(); ++j)
                    *log << (j ? " " : "") << std::setprecision(3)
                         << h.rounds.back().mean_losses[j];
                *log << "]";
            }
            *log << std::defaultfloat << '\n';
        }
    };

    auto [state, history] = run(cfg.train, train.points, observer);

    ExperimentResult res = evaluate_mixture(cfg, state, data);

    detail::write_metrics_csv(out / "metrics.csv", cfg.run_id(), res);
    detail::write_history_csv(out / "history.csv", history);
    detail::write_timings_csv(out / "timings.csv", history);
    if (log) {
        *log << "done: kde_loglik " << res.kde_loglik;
        if (res.purity >= 0.0) *log << "  purity " << res.purity << "  ari " << res.ari;
        *log << '\n';
    }
    return res;
}

struct CompareRow {
    std::string run_id, name, baseline;
    int modes = 0;
    double kde_loglik = 0.0;
    double purity = -1.0;
    double ari = 0.0;
    bool best = false;
};

inline std::vector<CompareRow> compare_runs(const std::vector<std::string>& dirs) {
    namespace fs = std::filesystem;
    std::vector<CompareRow> rows;
    for (const auto& d : dirs) {
        CompareRow row;
        {
            std::ifstream f(fs::path(d) / "config.json");
            if (!f) throw ConfigError("compare: missing config.json in " + d);
            nlohmann::json js;
            try {
                f >> js;
            } catch (const nlohmann::json::exception& e) {
                throw ParseError("compare: bad config.json in " + d + ": " + e.what());
            }
            row.name = js.value("name", std::string("?"));
            row.baseline = js.value("baseline", std::string("?"));
            row.modes = js.contains("data") ? js["data"].value("modes", 0) : 0;
        }
        {
            std::ifstream f(fs::path(d) / "metrics.csv");
            if (!f) throw ConfigError("compare: missing metrics.csv in " + d);
            std::string line;
            std::getline(f, line);  // header
            bool have_kde = false;
            while (std::getline(f, line)) {
                auto fields = detail::split_csv_line(line);
                if (fields.size() != 4) continue;
                row.run_id = fields[0];
                if (fields[2] == "kde_loglik") {
                    row.kde_loglik = std::stod(fields[3]);
                    have_kde = true;
                } else if (fields[2] == "purity")
                    row.purity = std::stod(fields[3]);
                else if (fields[2] == "ari")
                    row.ari = std::stod(fields[3]);
            }
            if (!have_kde) throw ConfigError("compare: no kde_loglik metric in " + d);
        }
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const CompareRow& a, const CompareRow& b) {
        if (a.modes != b.modes) return a.modes < b.modes;
        return a.kde_loglik > b.kde_loglik;
    });
    for (std::size_t i = 0; i < rows.size(); ++i)
        rows[i].best = i == 0 || rows[i].modes != rows[i - 1].modes;
    return rows;
}

inline void print_compare_table(const std::vector<CompareRow>& rows, std::ostream& os) {
    os << std::left << std::setw(28) << "run" << std::setw(14) << "baseline" << std::setw(7)
       << "modes" << std::setw(14) << "kde_loglik" << std::setw(9) << "purity" << "\n";
    for (const auto& r : rows) {
        std::ostringstream kde;
        kde << std::fixed << std::setprecision(3) << r.kde_loglik << (r.best ? " *" : "");
        std::ostringstream pur;
        if (r.purity >= 0.0) pur << std::fixed << std::setprecision(3) << r.purity;
        os << std::left << std::setw(28) << r.run_id << std::setw(14) << r.baseline
           << std::setw(7) << r.modes << std::setw(14) << kde.str() << std::setw(9) << pur.str()
           << "\n";
    }
    os << "* best kde_loglik within its mode count\n";
}

inline void write_compare_csv(const std::vector<CompareRow>& rows, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("compare: cannot open " + path);
    f << "run_id,name,baseline,modes,kde_loglik,purity,ari,best\n";
    char buf[64];
    for (const auto& r : rows) {
        f << r.run_id << ',' << r.name << ',' << r.baseline << ',' << r.modes << ',';
        std::snprintf(buf, sizeof buf, "%.17g", r.kde_loglik);
        f << buf << ',';
        if (r.purity >= 0.0) {
            std::snprintf(buf, sizeof buf, "%.17g", r.purity);
            f << buf;
        }
        f << ',';
        if (r.purity >= 0.0) {
            std::snprintf(buf, sizeof buf, "%.17g", r.ari);
            f << buf;
        }
        f << ',' << (r.best ? 1 : 0) << '\n';
    }
}

} // namespace genmix
