#include "ldbp/channel.hpp"

#include "ldbp/fft.hpp"
#include "ldbp/steps.hpp"

#include <cmath>

namespace ldbp::channel {

void FiberLink::validate() const
{
    if (!(span_km > 0.0)) throw ConfigError("span_km must be positive");
    if (num_spans < 0) throw ConfigError("num_spans must be >= 0");
    if (!(alpha_db_per_km >= 0.0)) throw ConfigError("alpha_db_per_km must be >= 0");
    if (!(carrier_hz > 0.0)) throw ConfigError("carrier_hz must be positive");
}

RVec angular_frequencies(std::size_t n, double sample_rate_hz)
{
    RVec w(n);
    const double dn = static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double kk = static_cast<double>(k);
        const double f = (2 * k < n) ? kk / dn : (kk - dn) / dn;
        w[k] = 2.0 * kPi * f * sample_rate_hz;
    }
    return w;
}

double nonlinear_length_km(double alpha_np_per_km, double z_km)
{
    if (alpha_np_per_km == 0.0) return z_km;
    return -std::expm1(-alpha_np_per_km * z_km) / alpha_np_per_km;
}

namespace {

CVec linear_factors(const RVec& omega, const FiberLink& link, double z_km, bool include_loss)
{
    const double b2 = link.beta2_s2_per_km();
    const double amp = include_loss ? std::exp(-link.alpha_neper_per_km() / 2.0 * z_km) : 1.0;
    CVec h(omega.size());
    for (std::size_t k = 0; k < omega.size(); ++k) h[k] = std::polar(amp, b2 / 2.0 * omega[k] * omega[k] * z_km);
    return h;
}

void apply_linear(CVec& x, const CVec& factors)
{
    fft::forward_inplace(x);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] *= factors[k];
    fft::inverse_inplace(x);
}

void apply_kerr(CVec& x, double phase_per_watt)
{
    if (phase_per_watt == 0.0) return;
    for (auto& v : x) v *= std::polar(1.0, phase_per_watt * std::norm(v));
}

// Per-step factors of one span, reused across spans.
class SpanPropagator {
public:
    SpanPropagator(std::size_t n, double fs, const FiberLink& link, int steps, StepSizing sizing)
    {
        const RVec omega = angular_frequencies(n, fs);
        for (double d : forward_step_sizes(link, steps, sizing)) {
            factors_.push_back(linear_factors(omega, link, d, true));
            kerr_.push_back(link.gamma_per_w_km * nonlinear_length_km(link.alpha_neper_per_km(), d));
        }
    }

    void run(CVec& x) const
    {
        for (std::size_t i = 0; i < factors_.size(); ++i) {
            apply_linear(x, factors_[i]);
            apply_kerr(x, kerr_[i]);
        }
    }

private:
    std::vector<CVec> factors_;
    RVec kerr_;
};

void add_ase(CVec& x, const FiberLink& link, double fs, std::uint64_t seed, bool noiseless)
{
    const double gain = std::exp(link.alpha_neper_per_km() / 2.0 * link.span_km);
    for (auto& v : x) v *= gain;
    if (noiseless) return;
    const double variance = edfa_noise_psd(link) * fs;
    Rng rng(seed);
    for (auto& v : x) v += complex_gaussian(rng, variance);
}

} // namespace

ComplexSignal cd_loss_step(const ComplexSignal& x, const FiberLink& link, double z_km, bool include_loss)
{
    if (z_km < 0.0) throw ConfigError("cd_loss_step: z must be >= 0");
    ComplexSignal out = x;
    if (z_km == 0.0) return out;
    apply_linear(out.samples, linear_factors(angular_frequencies(x.size(), x.sample_rate_hz), link, z_km, include_loss));
    return out;
}

ComplexSignal kerr_step(const ComplexSignal& x, const FiberLink& link, double z_km)
{
    if (z_km < 0.0) throw ConfigError("kerr_step: z must be >= 0");
    ComplexSignal out = x;
    apply_kerr(out.samples, link.gamma_per_w_km * nonlinear_length_km(link.alpha_neper_per_km(), z_km));
    return out;
}

RVec forward_step_sizes(const FiberLink& link, int steps, StepSizing sizing)
{
    if (sizing == StepSizing::Uniform) return init::uniform_step_sizes(link.span_km, steps);
    RVec back = init::log_step_sizes(link.span_km, steps, link.alpha_db_per_km);
    return RVec(back.rbegin(), back.rend());
}

ComplexSignal span_forward(const ComplexSignal& x, const FiberLink& link, int steps, StepSizing sizing)
{
    if (steps < 1) throw ConfigError("span_forward: steps must be >= 1");
    ComplexSignal out = x;
    SpanPropagator(x.size(), x.sample_rate_hz, link, steps, sizing).run(out.samples);
    return out;
}

double edfa_noise_psd(const FiberLink& link)
{
    const double al = link.alpha_neper_per_km() * link.span_km;
    const double nf = units::db_to_linear(link.noise_figure_db);
    // (e^{aL} - 1) n_sp with n_sp = NF / (2 (1 - e^{-aL})); the ratio tends to 1 as aL -> 0.
    const double ratio = (al == 0.0) ? 1.0 : std::expm1(al) / (-std::expm1(-al));
    return ratio * kPlanck * link.carrier_hz * nf / 2.0;
}

ComplexSignal edfa(const ComplexSignal& x, const FiberLink& link, std::uint64_t rng_seed, bool noiseless)
{
    ComplexSignal out = x;
    add_ase(out.samples, link, x.sample_rate_hz, rng_seed, noiseless);
    return out;
}

ComplexSignal propagate_link(const ComplexSignal& x, const FiberLink& link, int steps_per_span,
                             std::uint64_t rng_seed, bool noiseless, StepSizing sizing)
{
    link.validate();
    ComplexSignal out = x;
    const SpanPropagator span(x.size(), x.sample_rate_hz, link, steps_per_span, sizing);
    for (int s = 0; s < link.num_spans; ++s) {
        span.run(out.samples);
        add_ase(out.samples, link, x.sample_rate_hz, derive_seed(rng_seed, "noise-span", static_cast<std::uint64_t>(s)), noiseless);
    }
    require_finite(out.samples, "propagate_link");
    return out;
}

} // namespace ldbp::channel
