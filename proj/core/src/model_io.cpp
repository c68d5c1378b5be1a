#include "ldbp/model_io.hpp"

#include <fstream>

namespace ldbp::io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const char* layout_name(model::Layout l) { return l == model::Layout::Asymmetric ? "asymmetric" : "symmetric"; }

model::Layout parse_layout(const std::string& s)
{
    if (s == "asymmetric") return model::Layout::Asymmetric;
    if (s == "symmetric") return model::Layout::SymmetricPlusHalf;
    throw ConfigError("unknown layout '" + s + "'");
}

template <class T>
T field(const json& j, const char* key)
{
    if (!j.contains(key)) throw ConfigError(std::string("model dump is missing '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model dump field '") + key + "': " + e.what());
    }
}

} // namespace

ordered_json model_to_json(const model::LdbpModel& m)
{
    ordered_json j;
    j["format"] = "ldbp-model/1";
    j["layout"] = layout_name(m.layout);
    j["sample_rate_hz"] = m.sample_rate_hz;
    j["total_taps"] = m.total_taps();
    ordered_json layers = ordered_json::array();
    for (const auto& l : m.layers) {
        ordered_json e;
        e["delta_km"] = l.nonlinear.delta_km;
        e["cd_length_km"] = l.cd_length_km;
        RVec re;
        RVec im;
        for (const auto& h : l.linear.half_taps) {
            re.push_back(h.real());
            im.push_back(h.imag());
        }
        e["taps_re"] = re;
        e["taps_im"] = im;
        e["mask"] = l.linear.mask;
        e["gamma_per_w_km"] = l.nonlinear.gamma_per_w_km;
        e["effective_length_km"] = l.nonlinear.effective_length_km;
        if (l.nonlinear.kind == model::NonlinearKind::Essm) e["eta"] = l.nonlinear.eta_half_taps;
        layers.push_back(std::move(e));
    }
    j["layers"] = std::move(layers);
    return j;
}

model::LdbpModel model_from_json(const json& j)
{
    model::LdbpModel m;
    m.layout = parse_layout(field<std::string>(j, "layout"));
    m.sample_rate_hz = field<double>(j, "sample_rate_hz");
    for (const auto& e : field<json>(j, "layers")) {
        const auto re = field<RVec>(e, "taps_re");
        const auto im = field<RVec>(e, "taps_im");
        if (re.size() != im.size() || re.empty()) throw ConfigError("taps_re/taps_im size mismatch");
        CVec half(re.size());
        for (std::size_t i = 0; i < re.size(); ++i) half[i] = cplx(re[i], im[i]);
        model::Layer layer;
        layer.linear = model::LinearStep::from_half_taps(std::move(half));
        if (e.contains("mask")) {
            layer.linear.mask = field<std::vector<std::uint8_t>>(e, "mask");
            if (layer.linear.mask.size() != re.size()) throw ConfigError("mask size mismatch");
            layer.linear.enforce_mask();
        }
        const double delta = field<double>(e, "delta_km");
        layer.cd_length_km = e.contains("cd_length_km") ? field<double>(e, "cd_length_km") : delta;
        const double gamma = field<double>(e, "gamma_per_w_km");
        const double leff = field<double>(e, "effective_length_km");
        if (e.contains("eta")) {
            layer.nonlinear = model::NonlinearStep::essm(delta, gamma, leff, field<RVec>(e, "eta"));
        } else {
            layer.nonlinear = model::NonlinearStep::standard(delta, gamma, leff);
        }
        m.layers.push_back(std::move(layer));
    }
    m.validate();
    return m;
}

ordered_json state_to_json(const train::TrainState& s)
{
    ordered_json j = model_to_json(s.model);
    j["iteration"] = s.iteration;
    j["optimizer"] = {{"step_count", s.adam.step_count},
                      {"first_moment", s.adam.first_moment},
                      {"second_moment", s.adam.second_moment}};
    return j;
}

train::TrainState state_from_json(const json& j)
{
    train::TrainState s;
    s.model = model_from_json(j);
    s.iteration = j.contains("iteration") ? field<int>(j, "iteration") : 0;
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        s.adam.step_count = field<std::int64_t>(o, "step_count");
        s.adam.first_moment = field<RVec>(o, "first_moment");
        s.adam.second_moment = field<RVec>(o, "second_moment");
    }
    return s;
}

void write_json(const std::filesystem::path& path, const ordered_json& j)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

} // namespace ldbp::io
