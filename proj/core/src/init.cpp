#include "ldbp/init.hpp"

#include <cmath>

namespace ldbp::init {

namespace {

struct LayerPlan {
    double cd_km;
    double kerr_km;
    double kerr_eff_km;
};

std::vector<Segment> plan_segments(const channel::FiberLink& link, const ModelSpec& spec)
{
    if (spec.total_uniform_steps > 0) {
        const double d = link.total_km() / spec.total_uniform_steps;
        std::vector<Segment> segs;
        for (int i = 0; i < spec.total_uniform_steps; ++i) {
            const double end = link.total_km() - i * d;
            segs.push_back({end - d, d});
        }
        return segs;
    }
    if (spec.steps_per_span < 1) throw ConfigError("steps_per_span must be >= 1");
    const RVec per_span = spec.logarithmic
                              ? log_step_sizes(link.span_km, spec.steps_per_span, link.alpha_db_per_km, spec.log_adjust)
                              : uniform_step_sizes(link.span_km, spec.steps_per_span);
    return backprop_segments(link.span_km, link.num_spans, per_span);
}

std::vector<LayerPlan> plan_layers(const channel::FiberLink& link, const ModelSpec& spec)
{
    const auto segs = plan_segments(link, spec);
    auto kerr_eff = [&](const Segment& s) {
        return spec.loss_aware ? effective_length_km(link.span_km, link.alpha_db_per_km, s) : s.length_km;
    };
    std::vector<LayerPlan> out;
    if (spec.layout == model::Layout::Asymmetric) {
        for (const auto& s : segs) out.push_back({s.length_km, s.length_km, kerr_eff(s)});
        return out;
    }
    RVec deltas;
    for (const auto& s : segs) deltas.push_back(s.length_km);
    const RVec merged = merge_half_steps(deltas);
    for (std::size_t i = 0; i < merged.size(); ++i) {
        if (i < segs.size()) {
            out.push_back({merged[i], segs[i].length_km, kerr_eff(segs[i])});
        } else {
            out.push_back({merged[i], 0.0, 0.0});
        }
    }
    return out;
}

} // namespace

std::size_t layer_count(const channel::FiberLink& link, const ModelSpec& spec)
{
    return plan_layers(link, spec).size();
}

LdbpModel init_model(const channel::FiberLink& link, double sample_rate_hz, const ModelSpec& spec)
{
    link.validate();
    if (!(sample_rate_hz > 0.0)) throw ConfigError("sample rate must be positive");
    if (spec.nonlinearity == model::NonlinearKind::Essm && spec.essm_kappa < 0) throw ConfigError("kappa must be >= 0");
    const auto plan = plan_layers(link, spec);
    if (spec.half_lengths.size() != 1 && spec.half_lengths.size() != plan.size()) {
        throw ConfigError("half_lengths needs 1 or " + std::to_string(plan.size()) + " entries");
    }
    LdbpModel m;
    m.layout = spec.layout;
    m.sample_rate_hz = sample_rate_hz;
    Rng rng(derive_seed(spec.seed, "init"));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const int k = spec.half_lengths.size() == 1 ? spec.half_lengths[0] : spec.half_lengths[i];
        if (k < 0) throw ConfigError("half length must be >= 0");
        model::Layer layer;
        layer.cd_length_km = plan[i].cd_km;
        switch (spec.scheme) {
        case InitScheme::LeastSquares:
            layer.linear = ls_fit_inverse_cd(plan[i].cd_km, link.beta2_ps2_per_km, sample_rate_hz, k, spec.ls).step;
            break;
        case InitScheme::Unit:
            layer.linear = LinearStep::identity(k);
            break;
        case InitScheme::Random: {
            CVec half(static_cast<std::size_t>(k + 1));
            double e = 0.0;
            for (std::size_t m2 = 0; m2 < half.size(); ++m2) {
                const double re = normal(rng);
                const double im = normal(rng);
                half[m2] = cplx(re, im);
                e += (m2 == 0 ? 1.0 : 2.0) * std::norm(half[m2]);
            }
            for (auto& h : half) h /= e;
            layer.linear = LinearStep::from_half_taps(std::move(half));
            break;
        }
        }
        if (spec.nonlinearity == model::NonlinearKind::Essm && plan[i].kerr_km > 0.0) {
            RVec eta(static_cast<std::size_t>(spec.essm_kappa + 1), 0.0);
            eta[0] = 1.0;
            layer.nonlinear = model::NonlinearStep::essm(plan[i].kerr_km, link.gamma_per_w_km, plan[i].kerr_eff_km, std::move(eta));
        } else {
            layer.nonlinear = model::NonlinearStep::standard(plan[i].kerr_km, link.gamma_per_w_km, plan[i].kerr_eff_km);
        }
        m.layers.push_back(std::move(layer));
    }
    m.validate();
    return m;
}

} // namespace ldbp::init
