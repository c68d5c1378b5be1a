#pragma once

// Reverse-mode gradient of the phase-corrected symbol MSE with respect to the real and
// imaginary parts of every filter tap and ESSM eta tap.

#include "ldbp/model.hpp"
#include "ldbp/rxdsp.hpp"

#include <limits>

namespace ldbp::train {

using model::LdbpModel;

/// Maps model parameters to a flat real vector: per layer (Re h_0, Im h_0, ..., Re h_K, Im h_K)
/// followed by its eta taps, or a single eta block at the end when eta is shared.
struct ParamLayout {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> linear_offset;
    std::vector<std::size_t> eta_offset; // npos for standard steps
    std::size_t size{0};
    bool share_eta{false};
};

ParamLayout make_layout(const LdbpModel& model, bool share_eta = false);
RVec pack(const LdbpModel& model, const ParamLayout& layout);
/// Writes params back; masked taps stay zero.
void unpack(std::span<const double> params, const ParamLayout& layout, LdbpModel& model);
/// 1 for every trainable coordinate, 0 for masked taps.
std::vector<std::uint8_t> trainable_mask(const LdbpModel& model, const ParamLayout& layout);

/// One received frame at the model input rate with its transmitted symbols.
struct Example {
    CVec received;
    CVec symbols;
    double power_dbm{0.0};
};

struct LossGrad {
    double loss{0.0};
    RVec grad;
};

/// Loss of one frame: ||phase_correct(MF(model(r))) - s||^2 / N_sym.
double example_loss(const LdbpModel& model, const Example& ex, const signal::SignalSpec& spec);

LossGrad example_loss_grad(const LdbpModel& model, const ParamLayout& layout, const Example& ex,
                           const signal::SignalSpec& spec);

/// Batch-mean loss and gradient; per-frame work runs on `threads` workers and is reduced
/// by a fixed-order pairwise sum.
LossGrad batch_loss_grad(const LdbpModel& model, const ParamLayout& layout, std::span<const Example> batch,
                         const signal::SignalSpec& spec, int threads);

double batch_loss(const LdbpModel& model, std::span<const Example> batch, const signal::SignalSpec& spec, int threads);

} // namespace ldbp::train
