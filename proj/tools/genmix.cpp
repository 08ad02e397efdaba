#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "genmix/checkpoint.hpp"
#include "genmix/data.hpp"
#include "genmix/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::string> out_dir, bool dry_run) {
    genmix::ExperimentConfig cfg = genmix::load_experiment_config(config_path);
    if (seed) cfg.train.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    genmix::run_experiment(cfg, dry_run, &std::cout);
    return 0;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& csv_out) {
    auto rows = genmix::compare_runs(dirs);
    genmix::print_compare_table(rows, std::cout);
    genmix::write_compare_csv(rows, csv_out);
    std::cout << "wrote " << csv_out << "\n";
    return 0;
}

int cmd_sample(const std::string& round_dir, int n, const std::string& out_csv,
               std::uint64_t seed) {
    genmix::LoadedMixture m = genmix::load_checkpoint(round_dir);
    genmix::Rng rng = genmix::Rng::derive(seed, {genmix::stream::mixture_sample});
    genmix::Dataset d;
    d.points = genmix::sample_loaded(m, n, rng);
    genmix::save_csv_file(out_csv, d);
    std::cout << "wrote " << n << " samples to " << out_csv << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"competitive mixture-of-generators training"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool dry_run = false;
    auto* run = app.add_subcommand("run", "train a mixture from a config file");
    run->add_option("config", config_path, "json config file")->required();
    run->add_option("--seed", seed, "override train.seed");
    run->add_option("--out", out_dir, "override the output directory");
    run->add_flag("--dry-run", dry_run, "validate the config and exit without writing");

    std::vector<std::string> dirs;
    std::string csv_out = "comparison.csv";
    auto* cmp = app.add_subcommand("compare", "tabulate metrics across run directories");
    cmp->add_option("dirs", dirs, "run directories")->required()->expected(-1);
    cmp->add_option("-o,--out", csv_out, "csv output path");

    std::string round_dir, sample_out;
    int n_samples = 0;
    std::uint64_t sample_seed = 1;
    auto* smp = app.add_subcommand("sample", "draw points from a saved checkpoint");
    smp->add_option("checkpoint", round_dir, "round directory of a run")->required();
    smp->add_option("-n,--num", n_samples, "number of samples")->required();
    smp->add_option("-o,--out", sample_out, "output csv path")->required();
    smp->add_option("--seed", sample_seed, "sampling seed");

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(config_path, seed, out_dir, dry_run);
        if (cmp->parsed()) return cmd_compare(dirs, csv_out);
        if (smp->parsed()) return cmd_sample(round_dir, n_samples, sample_out, sample_seed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const genmix::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const genmix::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const genmix::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
