#include "commands.hpp"

#include "csv.hpp"

#include "ldbp/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>

namespace ldbp::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t file_hash(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + p.string());
    std::uint64_t h = 1469598103934665603ULL;
    for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
        h ^= static_cast<unsigned char>(*it);
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_manifest(const RunOptions& opts, const ExperimentConfig& cfg)
{
    ordered_json j = config_to_json(cfg);
    ordered_json m;
    m["command"] = opts.verb;
    m["version"] = kVersion;
    m["seeds"] = {{"root", cfg.seed},
                  {"init", derive_seed(cfg.seed, "init")},
                  {"batch", derive_seed(cfg.seed, "batch")},
                  {"holdout", derive_seed(cfg.seed, "holdout")},
                  {"eval", derive_seed(cfg.seed, "eval")}};
    ordered_json inputs = ordered_json::object();
    if (opts.model) inputs["model"] = {{"file", opts.model->filename().string()}, {"fnv1a", hex(file_hash(*opts.model))}};
    if (opts.resume) inputs["resume"] = {{"file", opts.resume->filename().string()}, {"fnv1a", hex(file_hash(*opts.resume))}};
    m["inputs"] = inputs;
    j["manifest"] = m;
    io::write_json(opts.out / "manifest.json", j);
}

double fs_digital(const ExperimentConfig& cfg) { return cfg.scenario.spec.digital_rate_hz(); }

model::LdbpModel build_model(const ExperimentConfig& cfg, const RunOptions& opts)
{
    if (opts.model) {
        auto m = io::model_from_json(io::read_json(*opts.model));
        if (m.sample_rate_hz != fs_digital(cfg)) throw ConfigError("model sample rate does not match the configured digital rate");
        return m;
    }
    auto m = init::init_model(cfg.scenario.link, fs_digital(cfg), cfg.model);
    if (cfg.multiobjective.enabled) {
        init::MultiObjectiveConfig mo;
        mo.weights = cfg.multiobjective.weights;
        mo.max_sweeps = cfg.multiobjective.max_sweeps;
        mo.beta2_ps2_per_km = cfg.scenario.link.beta2_ps2_per_km;
        mo.ls = cfg.model.ls;
        m = init::multiobjective_ls(m, mo).model;
    }
    return m;
}

rx::DbpOptions dbp_options(const ExperimentConfig& cfg)
{
    return {cfg.model.loss_aware, cfg.model.logarithmic, cfg.model.log_adjust};
}

double t_cd(const ExperimentConfig& cfg)
{
    const auto& l = cfg.scenario.link;
    return init::cd_memory_taps(l.beta2_ps2_per_km, cfg.scenario.spec.occupied_bandwidth_hz(), l.total_km(), fs_digital(cfg));
}

void print_table(const std::vector<std::string>& names, const std::vector<std::vector<train::SnrPoint>>& table)
{
    std::cout << "power_dbm";
    for (const auto& n : names) std::cout << "  " << n;
    std::cout << '\n';
    for (std::size_t p = 0; p < table.front().size(); ++p) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%9.2f", table.front()[p].power_dbm);
        std::cout << buf;
        for (std::size_t e = 0; e < table.size(); ++e) {
            std::snprintf(buf, sizeof buf, "  %*.2f", static_cast<int>(names[e].size()), table[e][p].snr_db);
            std::cout << buf;
        }
        std::cout << '\n';
    }
}

void write_snr_table(const std::filesystem::path& path, const std::vector<std::string>& names,
                     const std::vector<std::vector<train::SnrPoint>>& table)
{
    std::vector<std::string> header{"power_dbm"};
    for (const auto& n : names) header.push_back(n + "_snr_db");
    Csv csv(header);
    for (std::size_t p = 0; p < table.front().size(); ++p) {
        csv.row().add(table.front()[p].power_dbm);
        for (const auto& col : table) csv.add(col[p].snr_db);
    }
    csv.write(path);
    print_table(names, table);
}

void add_dbp(const ExperimentConfig& cfg, std::vector<train::Equalizer>& eqs, std::vector<std::string>& names)
{
    for (int k : cfg.evaluate.dbp_steps_per_span) {
        eqs.push_back(train::dbp_equalizer(cfg.scenario.link, fs_digital(cfg), k, dbp_options(cfg)));
        names.push_back("dbp" + std::to_string(k) + "stps");
    }
}

void cmd_simulate(const ExperimentConfig& cfg, const RunOptions& opts)
{
    std::vector<train::Equalizer> eqs{train::cdc_equalizer(cfg.scenario.link, fs_digital(cfg))};
    std::vector<std::string> names{"cdc"};
    add_dbp(cfg, eqs, names);
    const auto table = train::evaluate_equalizers(eqs, cfg.scenario, cfg.evaluate.powers_dbm, cfg.evaluate.frames,
                                                  cfg.seed, opts.threads);
    write_snr_table(opts.out / "metrics.csv", names, table);

    // First evaluation frame at the first power.
    const auto seed = derive_seed(derive_seed(cfg.seed, "eval", 0), "frame", 0);
    const auto ex = train::simulate_frame(cfg.scenario, cfg.evaluate.powers_dbm.front(), seed);
    Csv wave({"sample", "received_re", "received_im"});
    for (std::size_t i = 0; i < ex.received.size(); ++i) {
        wave.row().add(static_cast<long long>(i)).add(ex.received[i].real()).add(ex.received[i].imag());
    }
    wave.write(opts.out / "waveform.csv");
    Csv syms({"symbol", "tx_re", "tx_im"});
    for (std::size_t i = 0; i < ex.symbols.size(); ++i) {
        syms.row().add(static_cast<long long>(i)).add(ex.symbols[i].real()).add(ex.symbols[i].imag());
    }
    syms.write(opts.out / "symbols.csv");
}

train::PruneSchedule schedule_for(const ExperimentConfig& cfg, const model::LdbpModel& initial, int iterations, int offset,
                                  double front_fraction)
{
    if (!cfg.prune.enabled) return {};
    auto s = train::make_prune_schedule(initial, cfg.prune.target_half_lengths, iterations, front_fraction);
    for (auto& e : s.events) e.iteration += offset;
    return s;
}

void write_history(const std::filesystem::path& path, const std::vector<train::HistoryRow>& history)
{
    Csv csv({"iteration", "loss", "snr_db", "total_taps", "power_mix_hash"});
    for (const auto& h : history) {
        csv.row().add(static_cast<long long>(h.iteration)).add(h.loss);
        if (h.snr_db) {
            csv.add(*h.snr_db);
        } else {
            csv.add(std::string());
        }
        csv.add(static_cast<long long>(h.total_taps)).add(hex(h.power_mix_hash));
    }
    csv.write(path);
}

train::TrainConfig train_config(const ExperimentConfig& cfg, const RunOptions& opts)
{
    auto t = cfg.train;
    t.threads = opts.threads;
    return t;
}

void cmd_train(const ExperimentConfig& cfg, const RunOptions& opts)
{
    const auto initial = build_model(cfg, opts);
    const auto sched = schedule_for(cfg, initial, cfg.train.iterations, 0, cfg.prune.front_fraction);
    train::TrainState state = opts.resume ? io::state_from_json(io::read_json(*opts.resume))
                                          : train::start_state(initial, cfg.train.share_eta);
    const int report = std::max(1, cfg.train.iterations / 10);
    const auto observer = [&](const train::TrainState& s) {
        if (s.iteration % report == 0) std::cerr << "iteration " << s.iteration << '\n';
    };
    auto tc = train_config(cfg, opts);
    if (cfg.stop_after > 0) tc.iterations = std::min(tc.iterations, cfg.stop_after);
    const auto result = train::train(std::move(state), cfg.scenario, tc, sched, observer);
    io::write_json(opts.out / "model.json", io::model_to_json(result.state.model));
    io::write_json(opts.out / "state.json", io::state_to_json(result.state));
    write_history(opts.out / "history.csv", result.history);
    std::cout << "layers " << result.state.model.layers.size() << ", total taps " << result.state.model.total_taps()
              << ", iterations " << result.state.iteration << '\n';
    if (!result.history.empty()) std::cout << "final loss " << result.history.back().loss << '\n';
}

void cmd_evaluate(const ExperimentConfig& cfg, const RunOptions& opts)
{
    const auto m = build_model(cfg, opts);
    std::vector<train::Equalizer> eqs{train::model_equalizer(m), train::linear_only_equalizer(m),
                                      train::cdc_equalizer(cfg.scenario.link, fs_digital(cfg))};
    std::vector<std::string> names{"ldbp", "linear_only", "cdc"};
    add_dbp(cfg, eqs, names);
    const auto table = train::evaluate_equalizers(eqs, cfg.scenario, cfg.evaluate.powers_dbm, cfg.evaluate.frames,
                                                  cfg.seed, opts.threads);
    write_snr_table(opts.out / "snr.csv", names, table);
}

void cmd_prune_curve(const ExperimentConfig& cfg, const RunOptions& opts)
{
    const auto points = prune_curve(cfg, build_model(cfg, opts), opts.threads);
    std::filesystem::create_directories(opts.out / "checkpoints");
    const double tcd = t_cd(cfg);
    Csv csv({"iteration", "total_taps", "snr_db", "t_cd"});
    for (const auto& p : points) {
        char name[32];
        std::snprintf(name, sizeof name, "iter_%06d.json", p.iteration);
        io::write_json(opts.out / "checkpoints" / name, io::model_to_json(p.model));
        csv.row().add(static_cast<long long>(p.iteration)).add(static_cast<long long>(p.total_taps)).add(p.snr_db).add(tcd);
        std::cout << "taps " << p.total_taps << "  snr " << p.snr_db << " dB\n";
    }
    csv.write(opts.out / "prune_curve.csv");
}

void cmd_response(const ExperimentConfig& cfg, const RunOptions& opts)
{
    const auto m = build_model(cfg, opts);
    const auto table = model::overall_response(m, cfg.response_points);
    std::vector<std::string> header{"f_normalized"};
    for (std::size_t i = 0; i < table.per_step.size(); ++i) {
        header.push_back("step" + std::to_string(i) + "_mag_db");
        header.push_back("step" + std::to_string(i) + "_phase_rad");
    }
    header.push_back("overall_mag_db");
    header.push_back("overall_phase_rad");
    Csv csv(header);
    const auto db = [](cplx v) { return 20.0 * std::log10(std::abs(v)); };
    for (std::size_t k = 0; k < table.freq_normalized.size(); ++k) {
        csv.row().add(table.freq_normalized[k]);
        for (const auto& s : table.per_step) csv.add(db(s[k])).add(std::arg(s[k]));
        csv.add(db(table.overall[k])).add(std::arg(table.overall[k]));
    }
    csv.write(opts.out / "response.csv");
    std::cout << "steps " << table.per_step.size() << ", overall impulse response length " << table.total_length << '\n';
}

void cmd_tcd(const ExperimentConfig& cfg, const RunOptions& opts)
{
    const double v = t_cd(cfg);
    Csv csv({"total_km", "bandwidth_hz", "sample_rate_hz", "t_cd"});
    csv.row()
        .add(cfg.scenario.link.total_km())
        .add(cfg.scenario.spec.occupied_bandwidth_hz())
        .add(fs_digital(cfg))
        .add(v);
    csv.write(opts.out / "tcd.csv");
    std::cout << "T_cd = " << v << " taps\n";
}

} // namespace

std::vector<CurvePoint> prune_curve(const ExperimentConfig& cfg, const model::LdbpModel& initial, int threads)
{
    const auto& pc = cfg.prune_curve;
    if (!cfg.prune.enabled) throw ConfigError("prune-curve needs prune.enabled");
    if (pc.warmup_iterations >= cfg.train.iterations) {
        throw ConfigError("prune_curve.warmup_iterations must be below train.iterations");
    }
    const auto sched = schedule_for(cfg, initial, cfg.train.iterations - pc.warmup_iterations, pc.warmup_iterations,
                                    cfg.prune.front_fraction);
    std::map<int, std::pair<int, model::LdbpModel>, std::greater<>> kept;
    const auto observer = [&](const train::TrainState& s) {
        if (s.iteration % pc.checkpoint_interval == 0 || s.iteration == cfg.train.iterations) {
            kept.insert_or_assign(s.model.total_taps(), std::make_pair(s.iteration, s.model));
        }
    };
    auto tc = cfg.train;
    tc.threads = threads;
    train::train(train::start_state(initial, cfg.train.share_eta), cfg.scenario, tc, sched, observer);

    std::vector<CurvePoint> out;
    for (auto& [taps, entry] : kept) {
        const auto pts = train::evaluate(entry.second, cfg.scenario, pc.powers_dbm, pc.frames, cfg.seed, threads);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& p : pts) best = std::max(best, p.snr_db);
        out.push_back({entry.first, taps, best, std::move(entry.second)});
    }
    return out;
}

model::LdbpModel initial_model(const ExperimentConfig& cfg) { return build_model(cfg, RunOptions{}); }

ExperimentConfig resolve_config(const RunOptions& opts)
{
    json j = json::object();
    if (opts.preset) j = load_preset(*opts.preset);
    if (opts.config) j.merge_patch(io::read_json(*opts.config));
    if (opts.seed) j["seed"] = *opts.seed;
    if (opts.noiseless) j["channel"]["noiseless"] = true;
    if (opts.gamma) j["link"]["gamma_per_w_km"] = *opts.gamma;
    return config_from_json(j);
}

void run(const RunOptions& opts)
{
    if (opts.threads < 1) throw ConfigError("--threads must be >= 1");
    const ExperimentConfig cfg = resolve_config(opts);
    std::filesystem::create_directories(opts.out);
    write_manifest(opts, cfg);
    if (opts.verb == "simulate") {
        cmd_simulate(cfg, opts);
    } else if (opts.verb == "train") {
        cmd_train(cfg, opts);
    } else if (opts.verb == "evaluate") {
        cmd_evaluate(cfg, opts);
    } else if (opts.verb == "prune-curve") {
        cmd_prune_curve(cfg, opts);
    } else if (opts.verb == "response") {
        cmd_response(cfg, opts);
    } else if (opts.verb == "tcd") {
        cmd_tcd(cfg, opts);
    } else {
        throw ConfigError("unknown command '" + opts.verb + "'");
    }
}

} // namespace ldbp::cli
