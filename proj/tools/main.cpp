#include "cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    ldbp::cli::RunOptions opts;
    CLI::App app{"Learned digital backpropagation experiments"};
    app.require_subcommand(1);

    std::string config;
    std::string preset;
    std::uint64_t seed = 0;
    double gamma = 0.0;
    std::string model;
    std::string resume;
    std::string out = "out";

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "JSON experiment configuration")->check(CLI::ExistingFile);
        sub->add_option("--preset", preset, "preset name or path");
        sub->add_option("--seed", seed, "root seed");
        sub->add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", out, "output directory");
        sub->add_flag("--noiseless", opts.noiseless, "disable amplifier noise");
        sub->add_option("--gamma", gamma, "override the nonlinearity coefficient (1/W/km)");
    };
    const auto with_model = [&](CLI::App* sub) {
        sub->add_option("--model", model, "model dump to start from instead of the configured initialization")
            ->check(CLI::ExistingFile);
    };

    auto* simulate = app.add_subcommand("simulate", "propagate frames and report reference equalizer SNR");
    auto* train = app.add_subcommand("train", "train a model and write its dump and history");
    auto* evaluate = app.add_subcommand("evaluate", "SNR of a model against linear and DBP baselines");
    auto* prune = app.add_subcommand("prune-curve", "progressive pruning with checkpointed SNR");
    auto* response = app.add_subcommand("response", "per-step and overall filter responses");
    auto* tcd = app.add_subcommand("tcd", "chromatic dispersion memory in taps");
    for (auto* sub : {simulate, train, evaluate, prune, response, tcd}) common(sub);
    for (auto* sub : {train, evaluate, prune, response}) with_model(sub);
    train->add_option("--resume", resume, "training state to resume from")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    CLI::App* chosen = app.get_subcommands().front();
    opts.verb = chosen->get_name();
    if (!config.empty()) opts.config = config;
    if (!preset.empty()) opts.preset = preset;
    if (chosen->count("--seed") > 0) opts.seed = seed;
    if (chosen->count("--gamma") > 0) opts.gamma = gamma;
    if (!model.empty()) opts.model = model;
    if (!resume.empty()) opts.resume = resume;
    opts.out = out;

    try {
        ldbp::cli::run(opts);
    } catch (const ldbp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ldbp::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
