#include "ldbp/signal.hpp"

#include "ldbp/fft.hpp"

#include <cmath>

namespace ldbp::signal {

void SignalSpec::validate() const
{
    if (!(baud_rate_hz > 0.0)) throw ConfigError("baud_rate_hz must be positive");
    if (!(rolloff >= 0.0 && rolloff <= 1.0)) throw ConfigError("rolloff must lie in [0, 1]");
    if (digital_oversampling < 1) throw ConfigError("digital_oversampling must be >= 1");
    if (analog_oversampling <= digital_oversampling) {
        throw ConfigError("analog_oversampling must exceed digital_oversampling");
    }
    if (rrc_span_symbols < 1) throw ConfigError("rrc_span_symbols must be >= 1");
}

SymbolFrame generate_symbols(std::size_t count, Modulation modulation, std::uint64_t seed, double power_dbm)
{
    if (count < 1) throw ConfigError("symbol count must be >= 1");
    SymbolFrame frame;
    frame.modulation = modulation;
    frame.power_dbm = power_dbm;
    frame.seed = seed;
    frame.symbols.resize(count);
    Rng rng(seed);
    if (modulation == Modulation::GaussianIid) {
        for (auto& s : frame.symbols) s = complex_gaussian(rng, 1.0);
    } else {
        static constexpr double levels[4] = {-3.0, -1.0, 1.0, 3.0};
        const double norm = 1.0 / std::sqrt(10.0);
        std::uniform_int_distribution<int> pick(0, 3);
        for (auto& s : frame.symbols) {
            const int i = pick(rng);
            const int q = pick(rng);
            s = cplx(levels[i] * norm, levels[q] * norm);
        }
    }
    return frame;
}

namespace {

double rrc_value(double t, double beta)
{
    constexpr double eps = 1e-9;
    if (std::abs(t) < eps) return 1.0 - beta + 4.0 * beta / kPi;
    if (beta == 0.0) return std::sin(kPi * t) / (kPi * t);
    if (std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < eps) {
        const double a = kPi / (4.0 * beta);
        return beta / std::sqrt(2.0) * ((1.0 + 2.0 / kPi) * std::sin(a) + (1.0 - 2.0 / kPi) * std::cos(a));
    }
    const double num = std::sin(kPi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(kPi * t * (1.0 + beta));
    const double den = kPi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
    return num / den;
}

CVec folded_kernel(std::size_t n, std::span<const double> taps, bool adjoint)
{
    CVec kernel(n, cplx{});
    const auto center = static_cast<long>(taps.size() / 2);
    const auto ln = static_cast<long>(n);
    for (std::size_t m = 0; m < taps.size(); ++m) {
        long offset = static_cast<long>(m) - center;
        if (adjoint) offset = -offset;
        kernel[static_cast<std::size_t>(((offset % ln) + ln) % ln)] += taps[m];
    }
    return kernel;
}

CVec apply_kernel(std::span<const cplx> x, std::span<const double> taps, bool adjoint)
{
    const std::size_t n = x.size();
    if (n == 0) return {};
    CVec kernel = folded_kernel(n, taps, adjoint);
    if (taps.size() <= 48) {
        // Short filters: direct form over the nonzero kernel offsets.
        std::vector<std::pair<std::size_t, cplx>> nz;
        for (std::size_t d = 0; d < n; ++d) {
            if (kernel[d] != cplx{}) nz.emplace_back(d, kernel[d]);
        }
        CVec y(n, cplx{});
        for (std::size_t j = 0; j < n; ++j) {
            cplx acc{};
            for (const auto& [d, k] : nz) acc += k * x[(j + n - d) % n];
            y[j] = acc;
        }
        return y;
    }
    CVec X = fft::forward(x);
    fft::forward_inplace(kernel);
    for (std::size_t k = 0; k < n; ++k) X[k] *= kernel[k];
    fft::inverse_inplace(X);
    return X;
}

} // namespace

RVec rrc_taps(const SignalSpec& spec, int oversampling)
{
    if (!(spec.rolloff >= 0.0 && spec.rolloff <= 1.0)) throw ConfigError("rolloff must lie in [0, 1]");
    if (oversampling < 1) throw ConfigError("oversampling must be >= 1");
    const int len = spec.rrc_span_symbols * oversampling + 1;
    const double center = (len - 1) / 2.0;
    RVec taps(static_cast<std::size_t>(len));
    double e = 0.0;
    for (int i = 0; i < len; ++i) {
        const double t = (i - center) / oversampling;
        taps[static_cast<std::size_t>(i)] = rrc_value(t, spec.rolloff);
        e += taps[static_cast<std::size_t>(i)] * taps[static_cast<std::size_t>(i)];
    }
    const double norm = 1.0 / std::sqrt(e);
    for (auto& t : taps) t *= norm;
    return taps;
}

CVec circular_filter(std::span<const cplx> x, std::span<const double> taps)
{
    return apply_kernel(x, taps, false);
}

CVec circular_filter_adjoint(std::span<const cplx> y, std::span<const double> taps)
{
    return apply_kernel(y, taps, true);
}

ComplexSignal modulate(const SymbolFrame& frame, const SignalSpec& spec, int oversampling)
{
    if (oversampling < 1) throw ConfigError("oversampling must be >= 1");
    const auto os = static_cast<std::size_t>(oversampling);
    CVec up(frame.symbols.size() * os, cplx{});
    for (std::size_t k = 0; k < frame.symbols.size(); ++k) up[k * os] = frame.symbols[k];
    const RVec taps = rrc_taps(spec, oversampling);
    ComplexSignal out;
    out.sample_rate_hz = spec.baud_rate_hz * oversampling;
    out.samples = circular_filter(up, taps);
    const double scale = std::sqrt(units::dbm_to_watt(frame.power_dbm) * oversampling);
    for (auto& v : out.samples) v *= scale;
    return out;
}

ComplexSignal wdm_multiplex(std::span<const ComplexSignal> channels, double spacing_hz, double occupied_bandwidth_hz)
{
    if (channels.empty()) throw ConfigError("wdm_multiplex needs at least one channel");
    if (channels.size() % 2 == 0) throw ConfigError("wdm_multiplex needs an odd channel count");
    const std::size_t n = channels.front().size();
    const double fs = channels.front().sample_rate_hz;
    for (const auto& c : channels) {
        if (c.size() != n || c.sample_rate_hz != fs) {
            throw ConfigError("wdm channels must share length and sample rate");
        }
    }
    const auto center = static_cast<long>(channels.size() / 2);
    ComplexSignal out;
    out.sample_rate_hz = fs;
    out.samples.assign(n, cplx{});
    for (std::size_t c = 0; c < channels.size(); ++c) {
        const double offset = static_cast<double>(static_cast<long>(c) - center) * spacing_hz;
        if (std::abs(offset) + occupied_bandwidth_hz / 2.0 >= fs / 2.0) {
            throw ConfigError("wdm channel " + std::to_string(c) + " exceeds the simulation bandwidth");
        }
        for (std::size_t k = 0; k < n; ++k) {
            const double phase = 2.0 * kPi * offset * static_cast<double>(k) / fs;
            out.samples[k] += channels[c].samples[k] * std::polar(1.0, phase);
        }
    }
    return out;
}

} // namespace ldbp::signal
