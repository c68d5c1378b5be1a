#pragma once

// Data generation, the multi-power mini-batch training loop and Monte-Carlo evaluation.

#include "ldbp/optim.hpp"

#include <optional>

namespace ldbp::train {

/// Everything needed to draw a received frame.
struct Scenario {
    channel::FiberLink link;
    signal::SignalSpec spec;
    rx::RxConfig rx;
    signal::Modulation modulation{signal::Modulation::GaussianIid};
    std::size_t num_symbols{1024};
    int forward_steps_per_span{50};
    channel::StepSizing forward_sizing{channel::StepSizing::Logarithmic};
    bool noiseless{false};
    int wdm_channels{1};
    double wdm_spacing_hz{50e9};

    void validate() const;
};

/// Transmit, propagate and sample one frame. The center channel is the channel of interest.
Example simulate_frame(const Scenario& sc, double power_dbm, std::uint64_t seed);

struct TrainConfig {
    AdamConfig adam{};
    int batch_size{50};
    int iterations{0};
    RVec power_set_dbm{0.0};
    std::uint64_t seed{1};
    int threads{1};
    /// Evaluate the effective SNR on held-out frames every eval_interval iterations (0 = never).
    int eval_interval{0};
    int eval_frames{20};
    bool share_eta{false};
    /// 0 draws fresh frames every iteration; otherwise batches are sampled from a fixed pool
    /// of this many frames per training power.
    std::size_t pool_frames_per_power{0};

    void validate() const;
};

struct HistoryRow {
    int iteration{0};
    double loss{0.0};
    std::optional<double> snr_db; // at the median training power
    int total_taps{0};
    std::uint64_t power_mix_hash{0};
};

struct TrainState {
    model::LdbpModel model;
    AdamState adam;
    int iteration{0}; // iterations completed
};

struct TrainResult {
    TrainState state;
    std::vector<HistoryRow> history;
};

/// Called after every completed iteration with the state at that point.
using Observer = std::function<void(const TrainState&)>;

TrainState start_state(const model::LdbpModel& model, bool share_eta = false);

/// Runs iterations state.iteration ... cfg.iterations - 1. Iteration t depends only on the
/// seeds, t and the state, so resuming from a saved state reproduces an uninterrupted run.
TrainResult train(TrainState state, const Scenario& sc, const TrainConfig& cfg, const PruneSchedule& schedule,
                  const Observer& observer = {});

struct SnrPoint {
    double power_dbm{0.0};
    double snr_db{0.0};
    bool capped{false};
};

/// Maps a received frame to the equalized waveform at the digital rate.
using Equalizer = std::function<CVec(const Example&)>;

/// Monte-Carlo SNR per power for several equalizers on the same frames. Frame f at power
/// index p uses derive_seed(derive_seed(seed, "eval", p), "frame", f).
std::vector<std::vector<SnrPoint>> evaluate_equalizers(const std::vector<Equalizer>& eqs, const Scenario& sc,
                                                       std::span<const double> powers_dbm, int num_frames,
                                                       std::uint64_t seed, int threads);

std::vector<SnrPoint> evaluate(const model::LdbpModel& model, const Scenario& sc, std::span<const double> powers_dbm,
                               int num_frames, std::uint64_t seed, int threads);

Equalizer model_equalizer(const model::LdbpModel& model);
Equalizer linear_only_equalizer(const model::LdbpModel& model);
Equalizer cdc_equalizer(const channel::FiberLink& link, double sample_rate_hz);
Equalizer dbp_equalizer(const channel::FiberLink& link, double sample_rate_hz, int steps_per_span,
                        const rx::DbpOptions& opts = {});

/// Effective SNR of a model on prepared frames.
rx::SnrResult snr_on(const model::LdbpModel& model, std::span<const Example> frames, const signal::SignalSpec& spec,
                     int threads);

/// FNV-1a over the drawn power indices of one batch.
std::uint64_t power_mix_hash(std::span<const std::size_t> power_indices);

} // namespace ldbp::train
