#include "ldbp/rxdsp.hpp"

#include "ldbp/fft.hpp"
#include "ldbp/steps.hpp"

#include <cmath>
#include <map>

namespace ldbp::rx {

RxConfig RxConfig::defaults(const signal::SignalSpec& spec, bool wide)
{
    RxConfig c;
    c.digital_oversampling = spec.digital_oversampling;
    c.lpf_bandwidth_hz = spec.digital_rate_hz() * (wide ? 2.0 : 1.0);
    return c;
}

void RxConfig::validate(double analog_rate_hz) const
{
    if (digital_oversampling < 1) throw ConfigError("digital_oversampling must be >= 1");
    if (!(lpf_bandwidth_hz > 0.0)) throw ConfigError("lpf_bandwidth_hz must be positive");
    if (lpf_bandwidth_hz > analog_rate_hz) throw ConfigError("lpf_bandwidth_hz exceeds the analog sample rate");
}

ComplexSignal lowpass_downsample(const ComplexSignal& y, const RxConfig& cfg, double baud_rate_hz)
{
    cfg.validate(y.sample_rate_hz);
    const double target = baud_rate_hz * cfg.digital_oversampling;
    const double ratio_f = y.sample_rate_hz / target;
    const auto ratio = static_cast<std::size_t>(std::llround(ratio_f));
    if (ratio < 1 || std::abs(ratio_f - static_cast<double>(ratio)) > 1e-9 * ratio_f) {
        throw ConfigError("decimation ratio must be an integer");
    }
    const std::size_t n = y.size();
    if (n % ratio != 0) throw ConfigError("block length must be divisible by the decimation ratio");
    CVec x = y.samples;
    if (cfg.lpf_bandwidth_hz < y.sample_rate_hz) {
        fft::forward_inplace(x);
        const RVec w = channel::angular_frequencies(n, y.sample_rate_hz);
        for (std::size_t k = 0; k < n; ++k) {
            if (std::abs(w[k]) / (2.0 * kPi) > cfg.lpf_bandwidth_hz / 2.0) x[k] = cplx{};
        }
        fft::inverse_inplace(x);
    }
    ComplexSignal out;
    out.sample_rate_hz = target;
    out.samples.resize(n / ratio);
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] = x[i * ratio];
    return out;
}

namespace {

CVec cd_inverse_factors(const RVec& omega, double beta2_s2_per_km, double z_km)
{
    CVec h(omega.size());
    for (std::size_t k = 0; k < omega.size(); ++k) h[k] = std::polar(1.0, -beta2_s2_per_km / 2.0 * omega[k] * omega[k] * z_km);
    return h;
}

void apply_factors(CVec& x, const CVec& h)
{
    fft::forward_inplace(x);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] *= h[k];
    fft::inverse_inplace(x);
}

} // namespace

ComplexSignal reference_dbp(const ComplexSignal& r, const channel::FiberLink& link, int steps_per_span, const DbpOptions& opts)
{
    link.validate();
    if (steps_per_span < 1) throw ConfigError("steps_per_span must be >= 1");
    ComplexSignal out = r;
    if (link.num_spans == 0) return out;
    const RVec per_span = opts.logarithmic
                              ? init::log_step_sizes(link.span_km, steps_per_span, link.alpha_db_per_km, opts.log_adjust)
                              : init::uniform_step_sizes(link.span_km, steps_per_span);
    const auto segs = init::backprop_segments(link.span_km, link.num_spans, per_span);
    const RVec omega = channel::angular_frequencies(r.size(), r.sample_rate_hz);
    std::map<double, CVec> cache;
    for (const auto& s : segs) {
        auto it = cache.find(s.length_km);
        if (it == cache.end()) it = cache.emplace(s.length_km, cd_inverse_factors(omega, link.beta2_s2_per_km(), s.length_km)).first;
        apply_factors(out.samples, it->second);
        const double leff = opts.loss_aware ? init::effective_length_km(link.span_km, link.alpha_db_per_km, s) : s.length_km;
        const double c = -link.gamma_per_w_km * leff;
        if (c != 0.0) {
            for (auto& v : out.samples) v *= std::polar(1.0, c * std::norm(v));
        }
    }
    return out;
}

ComplexSignal cdc(const ComplexSignal& r, const channel::FiberLink& link)
{
    link.validate();
    ComplexSignal out = r;
    if (link.total_km() == 0.0) return out;
    apply_factors(out.samples, cd_inverse_factors(channel::angular_frequencies(r.size(), r.sample_rate_hz),
                                                  link.beta2_s2_per_km(), link.total_km()));
    return out;
}

MatchedFilter::MatchedFilter(const signal::SignalSpec& spec, double power_dbm)
    : taps_(signal::rrc_taps(spec, spec.digital_oversampling)),
      os_(static_cast<std::size_t>(spec.digital_oversampling)),
      scale_(1.0 / std::sqrt(units::dbm_to_watt(power_dbm) * spec.digital_oversampling))
{
}

CVec MatchedFilter::apply(std::span<const cplx> u) const
{
    const std::size_t n = u.size();
    if (n % os_ != 0) throw ConfigError("matched filter input length must be a multiple of rho_d");
    const std::size_t center = taps_.size() / 2;
    CVec s(n / os_);
    for (std::size_t k = 0; k < s.size(); ++k) {
        // sample index k*os - (m - center), kept non-negative before the modulo
        const std::size_t base = k * os_ + center + n * (1 + taps_.size() / n);
        cplx acc{};
        for (std::size_t m = 0; m < taps_.size(); ++m) acc += taps_[m] * u[(base - m) % n];
        s[k] = scale_ * acc;
    }
    return s;
}

CVec MatchedFilter::adjoint(std::span<const cplx> g, std::size_t n) const
{
    if (g.size() * os_ != n) throw ConfigError("matched filter adjoint size mismatch");
    const std::size_t center = taps_.size() / 2;
    CVec u(n, cplx{});
    for (std::size_t k = 0; k < g.size(); ++k) {
        const std::size_t base = k * os_ + center + n * (1 + taps_.size() / n);
        const cplx gk = scale_ * g[k];
        for (std::size_t m = 0; m < taps_.size(); ++m) u[(base - m) % n] += taps_[m] * gk;
    }
    return u;
}

signal::SymbolFrame matched_filter_downsample(const ComplexSignal& u, const signal::SignalSpec& spec, double power_dbm)
{
    signal::SymbolFrame f;
    f.power_dbm = power_dbm;
    f.symbols = MatchedFilter(spec, power_dbm).apply(u.samples);
    return f;
}

PhaseCorrected phase_correct(std::span<const cplx> s_tilde, std::span<const cplx> s_ref)
{
    if (s_tilde.size() != s_ref.size()) throw ConfigError("phase_correct: length mismatch");
    cplx c{};
    for (std::size_t i = 0; i < s_ref.size(); ++i) c += std::conj(s_ref[i]) * s_tilde[i];
    PhaseCorrected out;
    out.phase = std::arg(c);
    const cplx rot = std::polar(1.0, -out.phase);
    out.symbols.resize(s_tilde.size());
    for (std::size_t i = 0; i < s_tilde.size(); ++i) out.symbols[i] = s_tilde[i] * rot;
    return out;
}

FrameError frame_error(std::span<const cplx> s_hat, std::span<const cplx> s)
{
    if (s_hat.size() != s.size() || s.empty()) throw ConfigError("frame_error: length mismatch");
    double e = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) e += std::norm(s_hat[i] - s[i]);
    return {e, s.size()};
}

double mse(std::span<const cplx> s_hat, std::span<const cplx> s)
{
    const FrameError f = frame_error(s_hat, s);
    return f.error_energy / static_cast<double>(f.num_symbols);
}

SnrResult effective_snr(std::span<const FrameError> frames)
{
    if (frames.empty()) throw ConfigError("effective_snr needs at least one frame");
    double inv = 0.0;
    const std::size_t nsym = frames.front().num_symbols;
    for (const auto& f : frames) {
        if (f.num_symbols != nsym) throw ConfigError("effective_snr: frames differ in length");
        if (f.error_energy < 1e-15 * static_cast<double>(nsym)) return {kSnrCapDb, true};
        inv += 1.0 / f.error_energy;
    }
    const double snr_db = units::linear_to_db(static_cast<double>(nsym) * inv / static_cast<double>(frames.size()));
    if (snr_db >= kSnrCapDb) return {kSnrCapDb, true};
    return {snr_db, false};
}

} // namespace ldbp::rx
