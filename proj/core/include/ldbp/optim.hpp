#pragma once

// Adam and position-based pruning of the outermost symmetric tap pairs.

#include "ldbp/gradient.hpp"

namespace ldbp::train {

struct AdamConfig {
    double learning_rate{1e-3};
    double beta1{0.9};
    double beta2{0.999};
    double eps{1e-8};

    void validate() const;
};

struct AdamState {
    RVec first_moment;
    RVec second_moment;
    std::int64_t step_count{0};

    AdamState() = default;
    explicit AdamState(std::size_t n) : first_moment(n, 0.0), second_moment(n, 0.0) {}
};

/// Bias-corrected Adam update of params in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, const AdamConfig& cfg);

struct PruneEvent {
    int iteration{0};
    std::size_t layer{0};
};

struct PruneSchedule {
    std::vector<int> target_half_lengths;
    std::vector<PruneEvent> events;

    /// Event count and ordering against the model's current half lengths.
    void validate(const model::LdbpModel& model) const;
};

/// Events spread uniformly over the first `front_fraction` of the iterations; each event
/// removes one tap pair from the layer with the most remaining taps above target (lowest
/// index on ties).
PruneSchedule make_prune_schedule(const model::LdbpModel& model, std::vector<int> target_half_lengths, int iterations,
                                  double front_fraction = 0.4);

/// Fires the events scheduled at `iteration`: masks and zeroes the outermost active pair
/// and clears its optimizer moments. Returns the number of events fired.
int prune_apply(model::LdbpModel& model, const PruneSchedule& schedule, int iteration, AdamState* state = nullptr,
                const ParamLayout* layout = nullptr);

} // namespace ldbp::train
