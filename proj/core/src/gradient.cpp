#include "ldbp/gradient.hpp"

#include <cmath>

namespace ldbp::train {

ParamLayout make_layout(const LdbpModel& model, bool share_eta)
{
    ParamLayout p;
    p.share_eta = share_eta;
    int shared_kappa = -1;
    for (const auto& l : model.layers) {
        p.linear_offset.push_back(p.size);
        p.size += 2 * l.linear.half_taps.size();
        if (l.nonlinear.kind != model::NonlinearKind::Essm) {
            p.eta_offset.push_back(ParamLayout::npos);
            continue;
        }
        if (share_eta) {
            if (shared_kappa >= 0 && shared_kappa != l.nonlinear.kappa()) {
                throw ConfigError("shared eta needs equal kappa on every ESSM step");
            }
            shared_kappa = l.nonlinear.kappa();
            p.eta_offset.push_back(0); // fixed up below
        } else {
            p.eta_offset.push_back(p.size);
            p.size += l.nonlinear.eta_half_taps.size();
        }
    }
    if (share_eta && shared_kappa >= 0) {
        for (auto& off : p.eta_offset) {
            if (off != ParamLayout::npos) off = p.size;
        }
        p.size += static_cast<std::size_t>(shared_kappa + 1);
    }
    return p;
}

RVec pack(const LdbpModel& model, const ParamLayout& layout)
{
    RVec out(layout.size, 0.0);
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& l = model.layers[i];
        const std::size_t off = layout.linear_offset[i];
        for (std::size_t m = 0; m < l.linear.half_taps.size(); ++m) {
            out[off + 2 * m] = l.linear.half_taps[m].real();
            out[off + 2 * m + 1] = l.linear.half_taps[m].imag();
        }
    }
    // Shared eta takes its values from the first ESSM step.
    for (std::size_t i = model.layers.size(); i-- > 0;) {
        const std::size_t eo = layout.eta_offset[i];
        if (eo == ParamLayout::npos) continue;
        const auto& eta = model.layers[i].nonlinear.eta_half_taps;
        for (std::size_t k = 0; k < eta.size(); ++k) out[eo + k] = eta[k];
    }
    return out;
}

void unpack(std::span<const double> params, const ParamLayout& layout, LdbpModel& model)
{
    if (params.size() != layout.size) throw ConfigError("parameter vector size mismatch");
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        auto& l = model.layers[i];
        const std::size_t off = layout.linear_offset[i];
        for (std::size_t m = 0; m < l.linear.half_taps.size(); ++m) {
            l.linear.half_taps[m] = cplx(params[off + 2 * m], params[off + 2 * m + 1]);
        }
        l.linear.enforce_mask();
        const std::size_t eo = layout.eta_offset[i];
        if (eo == ParamLayout::npos) continue;
        auto& eta = l.nonlinear.eta_half_taps;
        for (std::size_t k = 0; k < eta.size(); ++k) eta[k] = params[eo + k];
    }
}

std::vector<std::uint8_t> trainable_mask(const LdbpModel& model, const ParamLayout& layout)
{
    std::vector<std::uint8_t> mask(layout.size, 1);
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& lin = model.layers[i].linear;
        for (std::size_t m = 0; m < lin.mask.size(); ++m) {
            if (!lin.mask[m]) {
                mask[layout.linear_offset[i] + 2 * m] = 0;
                mask[layout.linear_offset[i] + 2 * m + 1] = 0;
            }
        }
    }
    return mask;
}

namespace {

struct Output {
    CVec s_tilde;
    rx::PhaseCorrected corrected;
    double loss;
};

Output finish(const CVec& u, const Example& ex, const signal::SignalSpec& spec)
{
    Output o;
    o.s_tilde = rx::MatchedFilter(spec, ex.power_dbm).apply(u);
    if (o.s_tilde.size() != ex.symbols.size()) throw ConfigError("frame length does not match the symbol count");
    o.corrected = rx::phase_correct(o.s_tilde, ex.symbols);
    o.loss = rx::mse(o.corrected.symbols, ex.symbols);
    return o;
}

void check_tape(const model::ForwardTape& tape)
{
    for (std::size_t i = 0; i < tape.pre_nonlinear.size(); ++i) {
        for (const auto& v : tape.pre_nonlinear[i]) {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
                throw NumericalError("non-finite activation in layer " + std::to_string(i));
            }
        }
    }
}

// g = dL/dRe + j dL/dIm throughout.
CVec nonlinear_backward(const model::NonlinearStep& step, const CVec& a, const CVec& g, double* grad_eta)
{
    const double c = step.phase_coefficient();
    if (c == 0.0) return g;
    const std::size_t n = a.size();
    RVec power(n);
    for (std::size_t j = 0; j < n; ++j) power[j] = std::norm(a[j]);
    RVec theta(n);
    const bool essm = step.kind == model::NonlinearKind::Essm;
    const std::size_t kap = essm ? static_cast<std::size_t>(step.kappa()) : 0;
    for (std::size_t j = 0; j < n; ++j) {
        double acc = power[j];
        if (essm) {
            acc = step.eta_half_taps[0] * power[j];
            for (std::size_t m = 1; m <= kap; ++m) acc += step.eta_half_taps[m] * (power[(j + n - m) % n] + power[(j + m) % n]);
        }
        theta[j] = c * acc;
    }
    RVec q(n);
    for (std::size_t j = 0; j < n; ++j) {
        const cplx x = a[j] * std::polar(1.0, theta[j]);
        q[j] = std::imag(g[j] * std::conj(x));
    }
    CVec ga(n);
    for (std::size_t j = 0; j < n; ++j) {
        double w = q[j];
        if (essm) {
            w = step.eta_half_taps[0] * q[j];
            for (std::size_t m = 1; m <= kap; ++m) w += step.eta_half_taps[m] * (q[(j + n - m) % n] + q[(j + m) % n]);
        }
        ga[j] = std::polar(1.0, -theta[j]) * g[j] + 2.0 * c * w * a[j];
    }
    if (essm && grad_eta) {
        for (std::size_t m = 0; m <= kap; ++m) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                double p = power[(j + n - m) % n];
                if (m > 0) p += power[(j + m) % n];
                acc += q[j] * p;
            }
            grad_eta[m] += c * acc;
        }
    }
    return ga;
}

CVec linear_backward(const model::LinearStep& step, const CVec& x, const CVec& ga, double* grad_lin)
{
    const std::size_t n = x.size();
    const int kfull = step.half_length();
    const auto k = static_cast<std::size_t>(step.active_half_length());
    // Filter gradient: sum_j g_j conj(x_{j-m}) + (m > 0) sum_j g_j conj(x_{j+m}).
    for (std::size_t m = 0; m <= static_cast<std::size_t>(kfull); ++m) {
        if (!step.mask[m]) continue;
        cplx acc{};
        for (std::size_t j = 0; j < n; ++j) {
            acc += ga[j] * std::conj(x[(j + n - m) % n]);
            if (m > 0) acc += ga[j] * std::conj(x[(j + m) % n]);
        }
        grad_lin[2 * m] += acc.real();
        grad_lin[2 * m + 1] += acc.imag();
    }
    // Input gradient: the adjoint of a symmetric filter is the same filter conjugated.
    CVec gx(n);
    const cplx h0 = std::conj(step.half_taps[0]);
    for (std::size_t j = 0; j < n; ++j) {
        cplx acc = h0 * ga[j];
        for (std::size_t m = 1; m <= k; ++m) acc += std::conj(step.half_taps[m]) * (ga[(j + n - m) % n] + ga[(j + m) % n]);
        gx[j] = acc;
    }
    return gx;
}

} // namespace

double example_loss(const LdbpModel& model, const Example& ex, const signal::SignalSpec& spec)
{
    return finish(model::forward(model, ex.received), ex, spec).loss;
}

LossGrad example_loss_grad(const LdbpModel& model, const ParamLayout& layout, const Example& ex,
                           const signal::SignalSpec& spec)
{
    model::ForwardTape tape;
    const CVec u = model::forward(model, ex.received, &tape);
    check_tape(tape);
    const Output o = finish(u, ex, spec);
    LossGrad res;
    res.loss = o.loss;
    res.grad.assign(layout.size, 0.0);

    const auto nsym = static_cast<double>(ex.symbols.size());
    const cplx rot = std::polar(1.0, o.corrected.phase);
    CVec gs(o.s_tilde.size());
    for (std::size_t k = 0; k < gs.size(); ++k) gs[k] = (2.0 / nsym) * rot * (o.corrected.symbols[k] - ex.symbols[k]);
    CVec g = rx::MatchedFilter(spec, ex.power_dbm).adjoint(gs, u.size());

    for (std::size_t i = model.layers.size(); i-- > 0;) {
        const auto& layer = model.layers[i];
        const std::size_t eo = layout.eta_offset[i];
        g = nonlinear_backward(layer.nonlinear, tape.pre_nonlinear[i], g,
                               eo == ParamLayout::npos ? nullptr : res.grad.data() + eo);
        g = linear_backward(layer.linear, tape.layer_inputs[i], g, res.grad.data() + layout.linear_offset[i]);
    }
    return res;
}

namespace {

// Fixed-shape pairwise reduction, independent of the worker count.
void tree_sum(std::vector<LossGrad>& parts)
{
    for (std::size_t stride = 1; stride < parts.size(); stride *= 2) {
        for (std::size_t i = 0; i + stride < parts.size(); i += 2 * stride) {
            parts[i].loss += parts[i + stride].loss;
            auto& a = parts[i].grad;
            const auto& b = parts[i + stride].grad;
            for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
        }
    }
}

} // namespace

LossGrad batch_loss_grad(const LdbpModel& model, const ParamLayout& layout, std::span<const Example> batch,
                         const signal::SignalSpec& spec, int threads)
{
    if (batch.empty()) throw ConfigError("batch must be nonempty");
    std::vector<LossGrad> parts(batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t i) { parts[i] = example_loss_grad(model, layout, batch[i], spec); });
    tree_sum(parts);
    LossGrad out = std::move(parts.front());
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    for (auto& v : out.grad) v *= inv;
    return out;
}

double batch_loss(const LdbpModel& model, std::span<const Example> batch, const signal::SignalSpec& spec, int threads)
{
    if (batch.empty()) throw ConfigError("batch must be nonempty");
    std::vector<LossGrad> parts(batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t i) { parts[i].loss = example_loss(model, batch[i], spec); });
    tree_sum(parts);
    return parts.front().loss / static_cast<double>(batch.size());
}

} // namespace ldbp::train
