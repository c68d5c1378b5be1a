#include "config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>

#ifndef LDBP_PRESET_DIR
#define LDBP_PRESET_DIR "presets"
#endif

namespace ldbp::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

/// One JSON object; remembers the keys read so leftovers can be reported.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    Section child(const char* key)
    {
        used_.insert(key);
        if (!j_.contains(key)) return Section(empty(), path_ + key + ".");
        return Section(j_.at(key), path_ + key + ".");
    }

    template <class T>
    void read(const char* key, T& out)
    {
        used_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config key '" + path_ + key + "' has the wrong type");
        }
    }

    /// Numbers, or null for unbounded.
    void read_unbounded(const char* key, double& out)
    {
        used_.insert(key);
        if (!j_.contains(key)) return;
        if (j_.at(key).is_null()) {
            out = std::numeric_limits<double>::infinity();
            return;
        }
        read(key, out);
    }

    template <class E>
    void read_enum(const char* key, E& out, std::initializer_list<std::pair<const char*, E>> names)
    {
        std::string s;
        read(key, s);
        if (s.empty()) return;
        for (const auto& [n, v] : names) {
            if (s == n) {
                out = v;
                return;
            }
        }
        throw ConfigError("config key '" + path_ + key + "' has unknown value '" + s + "'");
    }

    void ignore(const char* key) { used_.insert(key); }

    void finish() const
    {
        for (const auto& item : j_.items()) {
            if (!used_.count(item.key())) throw ConfigError("unknown config key '" + path_ + item.key() + "'");
        }
    }

private:
    static const json& empty()
    {
        static const json e = json::object();
        return e;
    }
    [[nodiscard]] std::string where() const { return path_.empty() ? "config" : "config section '" + path_ + "'"; }

    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

const std::initializer_list<std::pair<const char*, signal::Modulation>> kModulations{
    {"gaussian", signal::Modulation::GaussianIid}, {"qam16", signal::Modulation::Qam16}};
const std::initializer_list<std::pair<const char*, channel::StepSizing>> kSizings{
    {"log", channel::StepSizing::Logarithmic}, {"uniform", channel::StepSizing::Uniform}};
const std::initializer_list<std::pair<const char*, model::Layout>> kLayouts{
    {"asymmetric", model::Layout::Asymmetric}, {"symmetric", model::Layout::SymmetricPlusHalf}};
const std::initializer_list<std::pair<const char*, init::InitScheme>> kSchemes{
    {"ls", init::InitScheme::LeastSquares}, {"unit", init::InitScheme::Unit}, {"random", init::InitScheme::Random}};
const std::initializer_list<std::pair<const char*, model::NonlinearKind>> kKinds{
    {"standard", model::NonlinearKind::Standard}, {"essm", model::NonlinearKind::Essm}};

template <class E>
std::string enum_name(E v, std::initializer_list<std::pair<const char*, E>> names)
{
    for (const auto& [n, e] : names) {
        if (e == v) return n;
    }
    return "?";
}

ordered_json unbounded(double v) { return std::isinf(v) ? ordered_json(nullptr) : ordered_json(v); }

} // namespace

ExperimentConfig config_from_json(const json& j)
{
    ExperimentConfig c;
    Section root(j, "");
    root.read("seed", c.seed);
    root.ignore("manifest");

    auto link = root.child("link");
    auto& l = c.scenario.link;
    link.read("alpha_db_per_km", l.alpha_db_per_km);
    link.read("beta2_ps2_per_km", l.beta2_ps2_per_km);
    link.read("gamma_per_w_km", l.gamma_per_w_km);
    link.read("span_km", l.span_km);
    link.read("num_spans", l.num_spans);
    link.read("noise_figure_db", l.noise_figure_db);
    link.read("carrier_hz", l.carrier_hz);
    link.finish();

    auto sig = root.child("signal");
    auto& s = c.scenario.spec;
    sig.read("baud_rate_hz", s.baud_rate_hz);
    sig.read("rolloff", s.rolloff);
    sig.read("analog_oversampling", s.analog_oversampling);
    sig.read("digital_oversampling", s.digital_oversampling);
    sig.read("rrc_span_symbols", s.rrc_span_symbols);
    sig.read_enum("modulation", c.scenario.modulation, kModulations);
    sig.read("num_symbols", c.scenario.num_symbols);
    sig.finish();

    auto rx = root.child("rx");
    double bw = 0.0;
    rx.read("lpf_bandwidth_hz", bw);
    if (bw != 0.0) c.lpf_bandwidth_hz = bw;
    rx.finish();

    auto ch = root.child("channel");
    ch.read("forward_steps_per_span", c.scenario.forward_steps_per_span);
    ch.read_enum("forward_sizing", c.scenario.forward_sizing, kSizings);
    ch.read("noiseless", c.scenario.noiseless);
    ch.finish();

    auto wdm = root.child("wdm");
    wdm.read("channels", c.scenario.wdm_channels);
    wdm.read("spacing_hz", c.scenario.wdm_spacing_hz);
    wdm.finish();

    auto mdl = root.child("model");
    auto& m = c.model;
    mdl.read_enum("layout", m.layout, kLayouts);
    mdl.read("steps_per_span", m.steps_per_span);
    mdl.read("total_uniform_steps", m.total_uniform_steps);
    mdl.read("logarithmic", m.logarithmic);
    mdl.read("log_adjust", m.log_adjust);
    mdl.read("half_lengths", m.half_lengths);
    mdl.read_enum("init", m.scheme, kSchemes);
    mdl.read_enum("nonlinearity", m.nonlinearity, kKinds);
    mdl.read("essm_kappa", m.essm_kappa);
    mdl.read("loss_aware", m.loss_aware);
    auto ls = mdl.child("ls");
    ls.read("num_freq_points", m.ls.num_freq_points);
    m.ls.signal_band_fraction = 0.0;
    ls.read("signal_band_fraction", m.ls.signal_band_fraction);
    ls.read_unbounded("max_oob_gain", m.ls.max_oob_gain);
    ls.read("initial_penalty", m.ls.initial_penalty);
    ls.read("max_rounds", m.ls.max_rounds);
    ls.finish();
    auto mo = mdl.child("multiobjective");
    mo.read("enabled", c.multiobjective.enabled);
    mo.read("weights", c.multiobjective.weights);
    mo.read("max_sweeps", c.multiobjective.max_sweeps);
    mo.finish();
    mdl.finish();

    auto tr = root.child("train");
    auto& t = c.train;
    tr.read("learning_rate", t.adam.learning_rate);
    tr.read("batch_size", t.batch_size);
    tr.read("iterations", t.iterations);
    tr.read("powers_dbm", t.power_set_dbm);
    tr.read("eval_interval", t.eval_interval);
    tr.read("eval_frames", t.eval_frames);
    tr.read("share_eta", t.share_eta);
    tr.read("pool_frames_per_power", t.pool_frames_per_power);
    tr.read("stop_after", c.stop_after);
    tr.finish();

    auto pr = root.child("prune");
    pr.read("enabled", c.prune.enabled);
    pr.read("target_half_lengths", c.prune.target_half_lengths);
    pr.read("front_fraction", c.prune.front_fraction);
    pr.finish();

    auto ev = root.child("evaluate");
    ev.read("powers_dbm", c.evaluate.powers_dbm);
    ev.read("frames", c.evaluate.frames);
    ev.read("dbp_steps_per_span", c.evaluate.dbp_steps_per_span);
    ev.finish();

    auto pc = root.child("prune_curve");
    pc.read("warmup_iterations", c.prune_curve.warmup_iterations);
    pc.read("checkpoint_interval", c.prune_curve.checkpoint_interval);
    pc.read("powers_dbm", c.prune_curve.powers_dbm);
    pc.read("frames", c.prune_curve.frames);
    pc.finish();

    auto rsp = root.child("response");
    rsp.read("points", c.response_points);
    rsp.finish();

    root.finish();
    c.finalize();
    return c;
}

void ExperimentConfig::finalize()
{
    const auto& spec = scenario.spec;
    scenario.rx.digital_oversampling = spec.digital_oversampling;
    scenario.rx.lpf_bandwidth_hz = lpf_bandwidth_hz.value_or(spec.digital_rate_hz());
    lpf_bandwidth_hz = scenario.rx.lpf_bandwidth_hz;
    if (model.ls.signal_band_fraction == 0.0) {
        model.ls.signal_band_fraction = init::LsFitConfig::for_signal(spec, spec.digital_oversampling).signal_band_fraction;
    }
    model.seed = seed;
    train.seed = seed;
    validate();
}

void ExperimentConfig::validate() const
{
    scenario.validate();
    train.validate();
    for (int k : model.half_lengths) {
        if (k < 0) throw ConfigError("model.half_lengths must be non-negative");
        model.ls.validate(k);
    }
    if (model.half_lengths.empty()) throw ConfigError("model.half_lengths must not be empty");
    const std::size_t layers = init::layer_count(scenario.link, model);
    if (model.half_lengths.size() != 1 && model.half_lengths.size() != layers) {
        throw ConfigError("model.half_lengths needs 1 or " + std::to_string(layers) + " entries");
    }
    if (model.nonlinearity == model::NonlinearKind::Essm && model.essm_kappa < 0) {
        throw ConfigError("model.essm_kappa must be non-negative");
    }
    if (stop_after < 0) throw ConfigError("train.stop_after must be non-negative");
    if (multiobjective.max_sweeps < 1) throw ConfigError("model.multiobjective.max_sweeps must be >= 1");
    if (prune.front_fraction <= 0.0 || prune.front_fraction > 1.0) throw ConfigError("prune.front_fraction must be in (0, 1]");
    if (evaluate.powers_dbm.empty() || evaluate.frames < 1) throw ConfigError("evaluate needs powers and frames >= 1");
    for (int k : evaluate.dbp_steps_per_span) {
        if (k < 1) throw ConfigError("evaluate.dbp_steps_per_span entries must be >= 1");
    }
    if (prune_curve.checkpoint_interval < 1) throw ConfigError("prune_curve.checkpoint_interval must be >= 1");
    if (prune_curve.warmup_iterations < 0) throw ConfigError("prune_curve.warmup_iterations must be non-negative");
    if (prune_curve.powers_dbm.empty() || prune_curve.frames < 1) throw ConfigError("prune_curve needs powers and frames >= 1");
    if (response_points < 1024) throw ConfigError("response.points must be >= 1024");
}

ordered_json config_to_json(const ExperimentConfig& c)
{
    const auto& l = c.scenario.link;
    const auto& s = c.scenario.spec;
    const auto& m = c.model;
    const auto& t = c.train;
    ordered_json j;
    j["seed"] = c.seed;
    j["link"] = {{"alpha_db_per_km", l.alpha_db_per_km}, {"beta2_ps2_per_km", l.beta2_ps2_per_km},
                 {"gamma_per_w_km", l.gamma_per_w_km},   {"span_km", l.span_km},
                 {"num_spans", l.num_spans},             {"noise_figure_db", l.noise_figure_db},
                 {"carrier_hz", l.carrier_hz}};
    j["signal"] = {{"baud_rate_hz", s.baud_rate_hz},
                   {"rolloff", s.rolloff},
                   {"analog_oversampling", s.analog_oversampling},
                   {"digital_oversampling", s.digital_oversampling},
                   {"rrc_span_symbols", s.rrc_span_symbols},
                   {"modulation", enum_name(c.scenario.modulation, kModulations)},
                   {"num_symbols", c.scenario.num_symbols}};
    j["rx"] = {{"lpf_bandwidth_hz", c.scenario.rx.lpf_bandwidth_hz}};
    j["channel"] = {{"forward_steps_per_span", c.scenario.forward_steps_per_span},
                    {"forward_sizing", enum_name(c.scenario.forward_sizing, kSizings)},
                    {"noiseless", c.scenario.noiseless}};
    j["wdm"] = {{"channels", c.scenario.wdm_channels}, {"spacing_hz", c.scenario.wdm_spacing_hz}};
    ordered_json ls = {{"num_freq_points", m.ls.num_freq_points},
                       {"signal_band_fraction", m.ls.signal_band_fraction},
                       {"max_oob_gain", unbounded(m.ls.max_oob_gain)},
                       {"initial_penalty", m.ls.initial_penalty},
                       {"max_rounds", m.ls.max_rounds}};
    ordered_json mo = {{"enabled", c.multiobjective.enabled},
                       {"weights", c.multiobjective.weights},
                       {"max_sweeps", c.multiobjective.max_sweeps}};
    j["model"] = {{"layout", enum_name(m.layout, kLayouts)},
                  {"steps_per_span", m.steps_per_span},
                  {"total_uniform_steps", m.total_uniform_steps},
                  {"logarithmic", m.logarithmic},
                  {"log_adjust", m.log_adjust},
                  {"half_lengths", m.half_lengths},
                  {"init", enum_name(m.scheme, kSchemes)},
                  {"nonlinearity", enum_name(m.nonlinearity, kKinds)},
                  {"essm_kappa", m.essm_kappa},
                  {"loss_aware", m.loss_aware},
                  {"ls", ls},
                  {"multiobjective", mo}};
    j["train"] = {{"learning_rate", t.adam.learning_rate},
                  {"batch_size", t.batch_size},
                  {"iterations", t.iterations},
                  {"powers_dbm", t.power_set_dbm},
                  {"eval_interval", t.eval_interval},
                  {"eval_frames", t.eval_frames},
                  {"share_eta", t.share_eta},
                  {"pool_frames_per_power", t.pool_frames_per_power},
                  {"stop_after", c.stop_after}};
    j["prune"] = {{"enabled", c.prune.enabled},
                  {"target_half_lengths", c.prune.target_half_lengths},
                  {"front_fraction", c.prune.front_fraction}};
    j["evaluate"] = {{"powers_dbm", c.evaluate.powers_dbm},
                     {"frames", c.evaluate.frames},
                     {"dbp_steps_per_span", c.evaluate.dbp_steps_per_span}};
    j["prune_curve"] = {{"warmup_iterations", c.prune_curve.warmup_iterations},
                        {"checkpoint_interval", c.prune_curve.checkpoint_interval},
                        {"powers_dbm", c.prune_curve.powers_dbm},
                        {"frames", c.prune_curve.frames}};
    j["response"] = {{"points", c.response_points}};
    return j;
}

std::filesystem::path preset_dir()
{
    if (const char* env = std::getenv("LDBP_PRESET_DIR"); env != nullptr && *env != '\0') return env;
    return LDBP_PRESET_DIR;
}

json load_preset(const std::string& name)
{
    std::filesystem::path p = name;
    if (name.find('/') == std::string::npos) p = preset_dir() / (name + ".json");
    std::ifstream in(p);
    if (!in) throw ConfigError("unknown preset '" + name + "' (looked for " + p.string() + ")");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

} // namespace ldbp::cli
