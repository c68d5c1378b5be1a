#pragma once

// Experiment configuration: the nested JSON document every verb runs from.

#include "ldbp/init.hpp"
#include "ldbp/train.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace ldbp::cli {

struct MultiObjectiveSettings {
    bool enabled{false};
    RVec weights{1.0};
    int max_sweeps{20};
};

struct PruneSettings {
    bool enabled{false};
    std::vector<int> target_half_lengths{1};
    double front_fraction{0.4};
};

struct EvaluateSettings {
    RVec powers_dbm{-6.0, -4.0, -2.0, 0.0, 2.0, 3.0, 4.0, 6.0};
    int frames{20};
    std::vector<int> dbp_steps_per_span{1};
};

struct PruneCurveSettings {
    /// Unpruned iterations before the first prune event.
    int warmup_iterations{0};
    int checkpoint_interval{100};
    /// SNR per checkpoint is the peak over these powers.
    RVec powers_dbm{3.0};
    int frames{20};
};

struct ExperimentConfig {
    std::uint64_t seed{1};
    train::Scenario scenario;
    /// Low-pass bandwidth; empty selects the digital sample rate.
    std::optional<double> lpf_bandwidth_hz;
    init::ModelSpec model;
    MultiObjectiveSettings multiobjective;
    train::TrainConfig train;
    /// Stop the train verb after this many completed iterations (0 = run all); the prune
    /// schedule still spans train.iterations, so the saved state can be resumed.
    int stop_after{0};
    PruneSettings prune;
    EvaluateSettings evaluate;
    PruneCurveSettings prune_curve;
    int response_points{2048};

    /// Resolves derived fields and checks every component invariant.
    void finalize();
    void validate() const;
};

/// Strict parse: unknown keys and wrong types are ConfigErrors. Missing keys keep defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);
/// Fully resolved document; parsing it back yields the same configuration.
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);

/// Directory searched by --preset (LDBP_PRESET_DIR overrides the built-in path).
std::filesystem::path preset_dir();
nlohmann::json load_preset(const std::string& name);

} // namespace ldbp::cli
