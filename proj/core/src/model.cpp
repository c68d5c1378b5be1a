#include "ldbp/model.hpp"

#include "ldbp/fft.hpp"

#include <algorithm>
#include <cmath>

namespace ldbp::model {

LinearStep LinearStep::identity(int half_length)
{
    CVec half(static_cast<std::size_t>(half_length + 1), cplx{});
    half[0] = 1.0;
    return from_half_taps(std::move(half));
}

LinearStep LinearStep::from_half_taps(CVec half)
{
    if (half.empty()) throw ConfigError("a linear step needs at least the center tap");
    LinearStep s;
    s.mask.assign(half.size(), 1);
    s.half_taps = std::move(half);
    return s;
}

int LinearStep::active_half_length() const
{
    int k = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) k = static_cast<int>(i);
    }
    return k;
}

CVec LinearStep::full_taps() const
{
    const int k = half_length();
    CVec full(static_cast<std::size_t>(2 * k + 1));
    for (int m = 0; m <= k; ++m) {
        const cplx v = mask[static_cast<std::size_t>(m)] ? half_taps[static_cast<std::size_t>(m)] : cplx{};
        full[static_cast<std::size_t>(k + m)] = v;
        full[static_cast<std::size_t>(k - m)] = v;
    }
    return full;
}

void LinearStep::enforce_mask()
{
    for (std::size_t i = 0; i < half_taps.size(); ++i) {
        if (!mask[i]) half_taps[i] = cplx{};
    }
}

NonlinearStep NonlinearStep::standard(double delta_km, double gamma, double effective_length_km)
{
    NonlinearStep s;
    s.kind = NonlinearKind::Standard;
    s.delta_km = delta_km;
    s.gamma_per_w_km = gamma;
    s.effective_length_km = delta_km == 0.0 ? 0.0 : effective_length_km;
    return s;
}

NonlinearStep NonlinearStep::essm(double delta_km, double gamma, double effective_length_km, RVec eta_half)
{
    if (eta_half.empty()) throw ConfigError("ESSM step needs at least eta_0");
    NonlinearStep s = standard(delta_km, gamma, effective_length_km);
    s.kind = NonlinearKind::Essm;
    s.eta_half_taps = std::move(eta_half);
    return s;
}

void LdbpModel::validate() const
{
    if (layers.empty()) throw ConfigError("model has no layers");
    if (!(sample_rate_hz > 0.0)) throw ConfigError("model sample rate must be positive");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.linear.mask.size() != l.linear.half_taps.size()) {
            throw ConfigError("layer " + std::to_string(i) + ": mask/tap size mismatch");
        }
        if (l.nonlinear.delta_km < 0.0) throw ConfigError("layer " + std::to_string(i) + ": negative delta");
        if (l.nonlinear.kind == NonlinearKind::Standard && !l.nonlinear.eta_half_taps.empty()) {
            throw ConfigError("layer " + std::to_string(i) + ": standard step with eta taps");
        }
        if (l.nonlinear.kind == NonlinearKind::Essm && l.nonlinear.eta_half_taps.empty()) {
            throw ConfigError("layer " + std::to_string(i) + ": ESSM step without eta taps");
        }
    }
    if (layout == Layout::SymmetricPlusHalf && !layers.back().nonlinear.is_identity()) {
        throw ConfigError("symmetric layout requires an identity final nonlinear step");
    }
}

int LdbpModel::total_taps() const
{
    int total = 1;
    for (const auto& l : layers) total += l.linear.active_length() - 1;
    return total;
}

namespace {

void check_fits(std::size_t n, const LinearStep& step)
{
    if (static_cast<std::size_t>(2 * step.half_length() + 1) > n) {
        throw ConfigError("filter of length " + std::to_string(2 * step.half_length() + 1) +
                          " exceeds block length " + std::to_string(n));
    }
}

} // namespace

CVec circular_conv_symmetric(std::span<const cplx> x, const LinearStep& step)
{
    const std::size_t n = x.size();
    check_fits(n, step);
    const auto k = static_cast<std::size_t>(step.active_half_length());
    // Circularly padded copy so the folded taps index without modulo.
    CVec pad(n + 2 * k);
    for (std::size_t i = 0; i < pad.size(); ++i) pad[i] = x[(i + n - k) % n];
    CVec y(n);
    const cplx h0 = step.mask[0] ? step.half_taps[0] : cplx{};
    for (std::size_t j = 0; j < n; ++j) {
        const cplx* c = pad.data() + j + k;
        cplx acc = h0 * c[0];
        for (std::size_t m = 1; m <= k; ++m) acc += step.half_taps[m] * (c[-static_cast<std::ptrdiff_t>(m)] + c[m]);
        y[j] = acc;
    }
    return y;
}

CVec circular_conv_symmetric_dft(std::span<const cplx> x, const LinearStep& step)
{
    const std::size_t n = x.size();
    check_fits(n, step);
    CVec kernel(n, cplx{});
    const int k = step.half_length();
    for (int m = 0; m <= k; ++m) {
        if (!step.mask[static_cast<std::size_t>(m)]) continue;
        const cplx h = step.half_taps[static_cast<std::size_t>(m)];
        kernel[static_cast<std::size_t>(m)] += h;
        if (m > 0) kernel[n - static_cast<std::size_t>(m)] += h;
    }
    CVec X = fft::forward(x);
    fft::forward_inplace(kernel);
    for (std::size_t i = 0; i < n; ++i) X[i] *= kernel[i];
    fft::inverse_inplace(X);
    return X;
}

namespace {

CVec apply_linear(std::span<const cplx> x, const LinearStep& step)
{
    // The direct form costs O(nK); switch to the DFT product once that exceeds a few FFTs.
    if (step.active_half_length() > 96) return circular_conv_symmetric_dft(x, step);
    return circular_conv_symmetric(x, step);
}

} // namespace

CVec nonlinear_apply(std::span<const cplx> x, const NonlinearStep& step)
{
    CVec y(x.begin(), x.end());
    const double c = step.phase_coefficient();
    if (c == 0.0) return y;
    const std::size_t n = x.size();
    if (step.kind == NonlinearKind::Standard) {
        for (auto& v : y) v *= std::polar(1.0, c * std::norm(v));
        return y;
    }
    RVec power(n);
    for (std::size_t j = 0; j < n; ++j) power[j] = std::norm(x[j]);
    const auto kap = static_cast<std::size_t>(step.kappa());
    if (2 * kap + 1 > n) throw ConfigError("ESSM filter longer than the block");
    for (std::size_t j = 0; j < n; ++j) {
        double acc = step.eta_half_taps[0] * power[j];
        for (std::size_t m = 1; m <= kap; ++m) {
            acc += step.eta_half_taps[m] * (power[(j + n - m) % n] + power[(j + m) % n]);
        }
        y[j] *= std::polar(1.0, c * acc);
    }
    return y;
}

CVec forward(const LdbpModel& model, std::span<const cplx> r, ForwardTape* tape)
{
    if (tape) {
        tape->layer_inputs.clear();
        tape->pre_nonlinear.clear();
        tape->layer_inputs.reserve(model.layers.size());
        tape->pre_nonlinear.reserve(model.layers.size());
    }
    CVec x(r.begin(), r.end());
    for (const auto& layer : model.layers) {
        CVec a = apply_linear(x, layer.linear);
        if (tape) {
            tape->layer_inputs.push_back(std::move(x));
            tape->pre_nonlinear.push_back(a);
        }
        x = nonlinear_apply(a, layer.nonlinear);
    }
    return x;
}

ComplexSignal forward(const LdbpModel& model, const ComplexSignal& r)
{
    if (r.sample_rate_hz != model.sample_rate_hz) throw ConfigError("input sample rate does not match the model");
    return {forward(model, std::span<const cplx>(r.samples)), r.sample_rate_hz};
}

CVec linear_only_forward(const LdbpModel& model, std::span<const cplx> r)
{
    CVec x(r.begin(), r.end());
    for (const auto& layer : model.layers) x = apply_linear(x, layer.linear);
    return x;
}

ComplexSignal linear_only_forward(const LdbpModel& model, const ComplexSignal& r)
{
    if (r.sample_rate_hz != model.sample_rate_hz) throw ConfigError("input sample rate does not match the model");
    return {linear_only_forward(model, std::span<const cplx>(r.samples)), r.sample_rate_hz};
}

CVec symmetric_response(const LinearStep& step, std::span<const double> omegas)
{
    CVec out(omegas.size());
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        cplx acc = step.mask[0] ? step.half_taps[0] : cplx{};
        for (std::size_t m = 1; m < step.half_taps.size(); ++m) {
            if (step.mask[m]) acc += 2.0 * std::cos(static_cast<double>(m) * omegas[i]) * step.half_taps[m];
        }
        out[i] = acc;
    }
    return out;
}

ResponseTable overall_response(const LdbpModel& model, int num_points)
{
    if (num_points < 2) throw ConfigError("response grid needs at least two points");
    ResponseTable t;
    t.freq_normalized.resize(static_cast<std::size_t>(num_points));
    RVec omegas(t.freq_normalized.size());
    for (int i = 0; i < num_points; ++i) {
        t.freq_normalized[static_cast<std::size_t>(i)] = -0.5 + static_cast<double>(i) / (num_points - 1);
        omegas[static_cast<std::size_t>(i)] = 2.0 * kPi * t.freq_normalized[static_cast<std::size_t>(i)];
    }
    t.overall.assign(omegas.size(), cplx(1.0, 0.0));
    for (const auto& layer : model.layers) {
        t.per_step.push_back(symmetric_response(layer.linear, omegas));
        for (std::size_t i = 0; i < omegas.size(); ++i) t.overall[i] *= t.per_step.back()[i];
    }
    t.total_length = model.total_taps();
    return t;
}

LdbpModel with_nonlinear_scalings(const LdbpModel& model, std::span<const double> scalings)
{
    if (scalings.size() != model.layers.size()) throw ConfigError("one scaling per layer required");
    LdbpModel out = model;
    for (std::size_t i = 0; i < scalings.size(); ++i) out.layers[i].nonlinear.effective_length_km *= scalings[i];
    return out;
}

LdbpModel rescale_equivalent(const LdbpModel& model, std::span<const double> scalings)
{
    if (model.layout != Layout::SymmetricPlusHalf) throw ConfigError("rescale_equivalent needs the symmetric layout");
    if (scalings.size() != model.layers.size()) throw ConfigError("one scaling per layer required");
    LdbpModel out = model;
    // sigma_xi(x) = sigma_1(sqrt(xi) x) / sqrt(xi): push sqrt(xi) into the filter before the
    // nonlinearity and its inverse into the filter after it.
    double carry = 1.0;
    for (std::size_t i = 0; i < out.layers.size(); ++i) {
        auto& layer = out.layers[i];
        double s = 1.0;
        const bool last = i + 1 == out.layers.size();
        if (!last && !layer.nonlinear.is_identity()) {
            if (!(scalings[i] > 0.0)) throw ConfigError("nonlinear scaling of layer " + std::to_string(i) + " must be positive");
            s = std::sqrt(scalings[i]);
        }
        for (auto& h : layer.linear.half_taps) h *= carry * s;
        carry = 1.0 / s;
    }
    return out;
}

} // namespace ldbp::model
