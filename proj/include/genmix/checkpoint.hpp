#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "genmix/common.hpp"
#include "genmix/models.hpp"
#include "genmix/partition.hpp"
#include "genmix/serialize.hpp"
#include "genmix/trainer.hpp"

namespace genmix {

// A run directory accumulates round_<t>/ subdirectories, each holding the
// full mixture at that point: model_<j>.bin, disc_<j>.bin, assignment.csv
// and a small state.json with the weights and identifying hashes.
inline void write_checkpoint(const std::filesystem::path& run_dir, int round,
                             const MixtureState& st, const std::string& config_hash) {
    namespace fs = std::filesystem;
    fs::path dir = run_dir / ("round_" + std::to_string(round));
    fs::create_directories(dir);
    for (std::size_t j = 0; j < st.models.size(); ++j) {
        std::ofstream f(dir / ("model_" + std::to_string(j) + ".bin"), std::ios::binary);
        if (!f) throw ParseError("checkpoint: cannot write model blob");
        st.models[j]->save(f);
    }
    for (std::size_t j = 0; j < st.ensemble.members.size(); ++j) {
        std::ofstream f(dir / ("disc_" + std::to_string(j) + ".bin"), std::ios::binary);
        if (!f) throw ParseError("checkpoint: cannot write discriminator blob");
        write_mlp(f, st.ensemble.members[j].spec, st.ensemble.members[j].params);
    }
    {
        std::ofstream f(dir / "assignment.csv", std::ios::binary);
        if (!f) throw ParseError("checkpoint: cannot write assignment");
        write_assignment_csv(f, st.assignment);
    }
    {
        nlohmann::json js;
        js["round"] = round;
        js["k"] = st.models.size();
        js["alpha"] = st.alpha;
        js["model_kind"] = st.models.empty() ? "" : st.models[0]->kind();
        js["data_dim"] = st.models.empty() ? 0 : st.models[0]->data_dim();
        js["config_hash"] = config_hash;
        std::ofstream f(dir / "state.json", std::ios::binary);
        if (!f) throw ParseError("checkpoint: cannot write state.json");
        f << js.dump(2) << '\n';
    }
}

struct LoadedMixture {
    std::vector<std::unique_ptr<GenerativeModel>> models;
    std::vector<double> alpha;
    int round = 0;
};

inline LoadedMixture load_checkpoint(const std::filesystem::path& round_dir) {
    namespace fs = std::filesystem;
    fs::path sj = round_dir / "state.json";
    std::ifstream f(sj);
    if (!f) throw ParseError("checkpoint: cannot open " + sj.string());
    nlohmann::json js;
    try {
        f >> js;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint: bad state.json: " + std::string(e.what()));
    }
    LoadedMixture m;
    try {
        m.round = js.at("round").get<int>();
        m.alpha = js.at("alpha").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint: state.json missing fields: " + std::string(e.what()));
    }
    const std::size_t k = m.alpha.size();
    for (std::size_t j = 0; j < k; ++j) {
        fs::path mp = round_dir / ("model_" + std::to_string(j) + ".bin");
        std::ifstream mf(mp, std::ios::binary);
        if (!mf) throw ParseError("checkpoint: missing " + mp.string());
        m.models.push_back(load_model(mf));
    }
    return m;
}

// Sampling from a reloaded checkpoint, mirroring sample_mixture on live state.
inline Matrix sample_loaded(const LoadedMixture& m, int n, Rng& rng) {
    MixtureState st;
    for (const auto& mm : m.models) st.models.push_back(mm->clone());
    st.alpha = m.alpha;
    return sample_mixture(st, n, rng);
}

} // namespace genmix
