#pragma once

#include "config.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace ldbp::cli {

struct RunOptions {
    std::string verb;
    std::optional<std::filesystem::path> config;
    std::optional<std::string> preset;
    std::optional<std::uint64_t> seed;
    int threads{1};
    std::filesystem::path out{"out"};
    std::optional<std::filesystem::path> model;
    std::optional<std::filesystem::path> resume;
    bool noiseless{false};
    std::optional<double> gamma;
};

struct CurvePoint {
    int iteration{0};
    int total_taps{0};
    double snr_db{0.0};
    model::LdbpModel model;
};

/// Trains with progressive pruning and returns the last checkpoint of every tap count, in
/// decreasing tap order, each with its peak SNR over prune_curve.powers_dbm.
std::vector<CurvePoint> prune_curve(const ExperimentConfig& cfg, const model::LdbpModel& initial, int threads);

/// Configured initialization, including the optional multi-objective refinement.
model::LdbpModel initial_model(const ExperimentConfig& cfg);

/// Preset, then --config merged over it, then the overriding flags.
ExperimentConfig resolve_config(const RunOptions& opts);

/// Dispatches on opts.verb; throws ConfigError or NumericalError on failure.
void run(const RunOptions& opts);

} // namespace ldbp::cli
