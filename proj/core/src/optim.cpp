#include "ldbp/optim.hpp"

#include <algorithm>
#include <cmath>

namespace ldbp::train {

void AdamConfig::validate() const
{
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("Adam eps must be positive");
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, const AdamConfig& cfg)
{
    if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
        state.second_moment.size() != params.size()) {
        throw ConfigError("Adam state does not match the parameter count");
    }
    ++state.step_count;
    const double t = static_cast<double>(state.step_count);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        params[i] -= cfg.learning_rate * (m / c1) / (std::sqrt(v / c2) + cfg.eps);
    }
}

void PruneSchedule::validate(const model::LdbpModel& model) const
{
    if (target_half_lengths.size() != model.layers.size()) throw ConfigError("one prune target per layer required");
    std::size_t expected = 0;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const int k = model.layers[i].linear.active_half_length();
        if (target_half_lengths[i] < 0 || target_half_lengths[i] > k) {
            throw ConfigError("prune target of layer " + std::to_string(i) + " out of range");
        }
        expected += static_cast<std::size_t>(k - target_half_lengths[i]);
    }
    if (events.size() != expected) throw ConfigError("prune event count does not match the targets");
    for (std::size_t e = 0; e < events.size(); ++e) {
        if (events[e].layer >= model.layers.size()) throw ConfigError("prune event for a nonexistent layer");
        if (e > 0 && events[e].iteration <= events[e - 1].iteration) {
            throw ConfigError("prune event iterations must be strictly increasing");
        }
    }
}

PruneSchedule make_prune_schedule(const model::LdbpModel& model, std::vector<int> target_half_lengths, int iterations,
                                  double front_fraction)
{
    if (target_half_lengths.size() == 1 && model.layers.size() > 1) {
        target_half_lengths.assign(model.layers.size(), target_half_lengths.front());
    }
    if (target_half_lengths.size() != model.layers.size()) throw ConfigError("one prune target per layer required");
    if (!(front_fraction > 0.0 && front_fraction <= 1.0)) throw ConfigError("front_fraction must lie in (0, 1]");
    PruneSchedule s;
    s.target_half_lengths = target_half_lengths;
    std::vector<int> cur;
    std::size_t total = 0;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        cur.push_back(model.layers[i].linear.active_half_length());
        if (target_half_lengths[i] < 0 || target_half_lengths[i] > cur.back()) {
            throw ConfigError("prune target of layer " + std::to_string(i) + " out of range");
        }
        total += static_cast<std::size_t>(cur.back() - target_half_lengths[i]);
    }
    if (total == 0) return s;
    const auto window = static_cast<std::size_t>(std::floor(front_fraction * iterations));
    if (window < total) {
        throw ConfigError("pruning window of " + std::to_string(window) + " iterations cannot hold " +
                          std::to_string(total) + " events");
    }
    for (std::size_t e = 0; e < total; ++e) {
        std::size_t pick = 0;
        int best = -1;
        for (std::size_t i = 0; i < cur.size(); ++i) {
            if (cur[i] > target_half_lengths[i] && cur[i] > best) {
                best = cur[i];
                pick = i;
            }
        }
        --cur[pick];
        s.events.push_back({static_cast<int>((e + 1) * window / total) - 1, pick});
    }
    return s;
}

int prune_apply(model::LdbpModel& model, const PruneSchedule& schedule, int iteration, AdamState* state,
                const ParamLayout* layout)
{
    int fired = 0;
    for (const auto& ev : schedule.events) {
        if (ev.iteration != iteration) continue;
        if (ev.layer >= model.layers.size()) throw ConfigError("prune event for a nonexistent layer");
        auto& lin = model.layers[ev.layer].linear;
        const int k = lin.active_half_length();
        if (k == 0) throw ConfigError("layer " + std::to_string(ev.layer) + " cannot be pruned below one tap");
        const auto ku = static_cast<std::size_t>(k);
        lin.mask[ku] = 0;
        lin.half_taps[ku] = cplx{};
        if (state && layout) {
            const std::size_t off = layout->linear_offset[ev.layer] + 2 * ku;
            for (std::size_t d = 0; d < 2; ++d) {
                state->first_moment[off + d] = 0.0;
                state->second_moment[off + d] = 0.0;
            }
        }
        ++fired;
    }
    return fired;
}

} // namespace ldbp::train
