#include "ldbp/train.hpp"

#include <algorithm>
#include <cmath>

namespace ldbp::train {

void TrainConfig::validate() const
{
    adam.validate();
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (iterations < 0) throw ConfigError("iterations must be >= 0");
    if (power_set_dbm.empty()) throw ConfigError("power_set_dbm must be nonempty");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (eval_interval < 0 || eval_frames < 1) throw ConfigError("invalid evaluation settings");
}

std::uint64_t power_mix_hash(std::span<const std::size_t> power_indices)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t idx : power_indices) {
        for (int b = 0; b < 8; ++b) {
            h ^= (static_cast<std::uint64_t>(idx) >> (8 * b)) & 0xffu;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

TrainState start_state(const model::LdbpModel& model, bool share_eta)
{
    TrainState s;
    s.model = model;
    s.adam = AdamState(make_layout(model, share_eta).size);
    return s;
}

namespace {

std::vector<Example> simulate_many(const Scenario& sc, std::size_t count, int threads,
                                   const std::function<std::pair<double, std::uint64_t>(std::size_t)>& draw)
{
    std::vector<Example> out(count);
    parallel_for(count, threads, [&](std::size_t i) {
        const auto [p, seed] = draw(i);
        out[i] = simulate_frame(sc, p, seed);
    });
    return out;
}

rx::FrameError equalized_error(const CVec& u, const Example& ex, const signal::SignalSpec& spec)
{
    const CVec s_tilde = rx::MatchedFilter(spec, ex.power_dbm).apply(u);
    return rx::frame_error(rx::phase_correct(s_tilde, ex.symbols).symbols, ex.symbols);
}

bool finite(std::span<const double> v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

} // namespace

rx::SnrResult snr_on(const model::LdbpModel& model, std::span<const Example> frames, const signal::SignalSpec& spec,
                     int threads)
{
    std::vector<rx::FrameError> errs(frames.size());
    parallel_for(frames.size(), threads, [&](std::size_t i) {
        errs[i] = equalized_error(model::forward(model, frames[i].received), frames[i], spec);
    });
    return rx::effective_snr(errs);
}

TrainResult train(TrainState state, const Scenario& sc, const TrainConfig& cfg, const PruneSchedule& schedule,
                  const Observer& observer)
{
    sc.validate();
    cfg.validate();
    state.model.validate();
    if (state.iteration == 0 && !schedule.events.empty()) schedule.validate(state.model);
    const ParamLayout layout = make_layout(state.model, cfg.share_eta);
    if (state.adam.first_moment.size() != layout.size) throw ConfigError("optimizer state does not match the model");
    RVec params = pack(state.model, layout);
    unpack(params, layout, state.model); // ties shared eta from the first ESSM step

    const std::size_t np = cfg.power_set_dbm.size();
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    const std::size_t pool_n = cfg.pool_frames_per_power;

    std::vector<Example> pool;
    if (pool_n > 0) {
        pool = simulate_many(sc, np * pool_n, cfg.threads, [&](std::size_t i) {
            const std::size_t p = i / pool_n;
            return std::pair{cfg.power_set_dbm[p], derive_seed(derive_seed(cfg.seed, "pool", p), "frame", i % pool_n)};
        });
    }

    std::vector<Example> holdout;
    if (cfg.eval_interval > 0) {
        RVec sorted = cfg.power_set_dbm;
        std::sort(sorted.begin(), sorted.end());
        const double p_eval = sorted[(sorted.size() - 1) / 2];
        holdout = simulate_many(sc, static_cast<std::size_t>(cfg.eval_frames), cfg.threads, [&](std::size_t i) {
            return std::pair{p_eval, derive_seed(derive_seed(cfg.seed, "holdout"), "frame", i)};
        });
    }

    TrainResult res;
    double initial_loss = -1.0;
    int diverging = 0;
    for (int t = state.iteration; t < cfg.iterations; ++t) {
        Rng rng(derive_seed(cfg.seed, "batch", static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> pidx(batch);
        std::vector<std::size_t> fidx(batch);
        for (std::size_t b = 0; b < batch; ++b) {
            pidx[b] = static_cast<std::size_t>(rng() % np);
            if (pool_n > 0) fidx[b] = static_cast<std::size_t>(rng() % pool_n);
        }
        std::vector<Example> fresh;
        std::vector<Example> drawn;
        std::span<const Example> examples;
        if (pool_n > 0) {
            drawn.reserve(batch);
            for (std::size_t b = 0; b < batch; ++b) drawn.push_back(pool[pidx[b] * pool_n + fidx[b]]);
            examples = drawn;
        } else {
            fresh = simulate_many(sc, batch, cfg.threads, [&](std::size_t b) {
                return std::pair{cfg.power_set_dbm[pidx[b]],
                                 derive_seed(cfg.seed, "frame", static_cast<std::uint64_t>(t) * batch + b)};
            });
            examples = fresh;
        }

        const LossGrad lg = batch_loss_grad(state.model, layout, examples, sc.spec, cfg.threads);
        if (!std::isfinite(lg.loss) || !finite(lg.grad)) {
            throw NumericalError("non-finite loss or gradient at iteration " + std::to_string(t));
        }
        adam_step(state.adam, params, lg.grad, cfg.adam);
        unpack(params, layout, state.model);
        if (prune_apply(state.model, schedule, t, &state.adam, &layout) > 0) params = pack(state.model, layout);

        HistoryRow row;
        row.iteration = t;
        row.loss = lg.loss;
        row.total_taps = state.model.total_taps();
        row.power_mix_hash = power_mix_hash(pidx);
        if (cfg.eval_interval > 0 && ((t + 1) % cfg.eval_interval == 0 || t + 1 == cfg.iterations)) {
            row.snr_db = snr_on(state.model, holdout, sc.spec, cfg.threads).snr_db;
        }
        res.history.push_back(row);

        if (initial_loss < 0.0) initial_loss = lg.loss;
        diverging = lg.loss > 1e3 * initial_loss ? diverging + 1 : 0;
        if (diverging >= 100) {
            throw NumericalError("training diverged: loss " + std::to_string(lg.loss) + " at iteration " + std::to_string(t) +
                                 " exceeds 1000x the initial loss " + std::to_string(initial_loss) +
                                 " for 100 consecutive iterations");
        }
        state.iteration = t + 1;
        if (observer) observer(state);
    }
    res.state = std::move(state);
    return res;
}

std::vector<std::vector<SnrPoint>> evaluate_equalizers(const std::vector<Equalizer>& eqs, const Scenario& sc,
                                                       std::span<const double> powers_dbm, int num_frames,
                                                       std::uint64_t seed, int threads)
{
    sc.validate();
    if (num_frames < 1) throw ConfigError("num_frames must be >= 1");
    const auto nf = static_cast<std::size_t>(num_frames);
    const std::size_t total = powers_dbm.size() * nf;
    // errs[e][p * nf + f]
    std::vector<std::vector<rx::FrameError>> errs(eqs.size(), std::vector<rx::FrameError>(total));
    parallel_for(total, threads, [&](std::size_t i) {
        const std::size_t p = i / nf;
        const Example ex = simulate_frame(sc, powers_dbm[p], derive_seed(derive_seed(seed, "eval", p), "frame", i % nf));
        for (std::size_t e = 0; e < eqs.size(); ++e) errs[e][i] = equalized_error(eqs[e](ex), ex, sc.spec);
    });
    std::vector<std::vector<SnrPoint>> out(eqs.size());
    for (std::size_t e = 0; e < eqs.size(); ++e) {
        for (std::size_t p = 0; p < powers_dbm.size(); ++p) {
            const auto r = rx::effective_snr(std::span<const rx::FrameError>(errs[e]).subspan(p * nf, nf));
            out[e].push_back({powers_dbm[p], r.snr_db, r.capped});
        }
    }
    return out;
}

std::vector<SnrPoint> evaluate(const model::LdbpModel& model, const Scenario& sc, std::span<const double> powers_dbm,
                               int num_frames, std::uint64_t seed, int threads)
{
    return evaluate_equalizers({model_equalizer(model)}, sc, powers_dbm, num_frames, seed, threads).front();
}

Equalizer model_equalizer(const model::LdbpModel& model)
{
    return [model](const Example& ex) { return model::forward(model, ex.received); };
}

Equalizer linear_only_equalizer(const model::LdbpModel& model)
{
    return [model](const Example& ex) { return model::linear_only_forward(model, ex.received); };
}

Equalizer cdc_equalizer(const channel::FiberLink& link, double sample_rate_hz)
{
    return [link, sample_rate_hz](const Example& ex) { return rx::cdc({ex.received, sample_rate_hz}, link).samples; };
}

Equalizer dbp_equalizer(const channel::FiberLink& link, double sample_rate_hz, int steps_per_span, const rx::DbpOptions& opts)
{
    return [=](const Example& ex) { return rx::reference_dbp({ex.received, sample_rate_hz}, link, steps_per_span, opts).samples; };
}

} // namespace ldbp::train
