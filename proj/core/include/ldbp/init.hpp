#pragma once

// Filter initialization: constrained least-squares design of the per-step CD filters,
// unit and random initializers, joint multi-objective design, and filter factoring.

#include "ldbp/channel.hpp"
#include "ldbp/model.hpp"
#include "ldbp/steps.hpp"

#include <limits>
#include <optional>

namespace ldbp::init {

using model::LdbpModel;
using model::LinearStep;

/// Normalized angles w_i = 2 pi i / N for i = -N/2 ... N/2 (N + 1 points).
RVec design_grid(int num_freq_points);

/// Default grid size max(256, 8 T) for a filter of length T = 2K + 1.
int default_grid_size(int half_length);

/// exp(j xi w^2) on the given normalized angles, xi = -beta2 delta f_s^2 / 2.
CVec ideal_inverse_cd(double delta_km, double beta2_ps2_per_km, double sample_rate_hz, std::span<const double> omegas);

struct LsFitConfig {
    int num_freq_points{0};               // 0 selects default_grid_size
    double signal_band_fraction{0.275};   // in-band edge as |f| / f_s
    double max_oob_gain{1.0};             // infinity disables the cap
    double initial_penalty{1e-3};
    int max_rounds{6};

    void validate(int half_length) const;
    /// In-band edge (1 + rolloff)/2 * R_s / f_s.
    static LsFitConfig for_signal(const signal::SignalSpec& spec, int oversampling);
};

struct LsFitResult {
    LinearStep step;
    bool cap_satisfied{true};
    int rounds{0};
    double max_oob_gain{0.0};
    double max_inband_error{0.0};
};

/// Symmetric filter minimizing the in-band squared response error to target(w), with the
/// out-of-band magnitude held below the cap by an iteratively tightened penalty.
LsFitResult ls_fit_filter(const std::function<cplx(double)>& target, int half_length, const LsFitConfig& config);

/// ls_fit_filter against exp(j xi w^2).
LsFitResult ls_fit_inverse_cd(double delta_km, double beta2_ps2_per_km, double sample_rate_hz, int half_length,
                              const LsFitConfig& config);

enum class InitScheme { LeastSquares, Unit, Random };

struct ModelSpec {
    model::Layout layout{model::Layout::Asymmetric};
    /// Span-aligned steps per span; ignored when total_uniform_steps > 0.
    int steps_per_span{1};
    /// Uniform steps across the whole link regardless of span boundaries.
    int total_uniform_steps{0};
    bool logarithmic{true};
    double log_adjust{0.4};
    /// One entry for all layers, or one per layer.
    std::vector<int> half_lengths{4};
    InitScheme scheme{InitScheme::LeastSquares};
    std::uint64_t seed{0};
    model::NonlinearKind nonlinearity{model::NonlinearKind::Standard};
    int essm_kappa{0};
    bool loss_aware{true};
    LsFitConfig ls{};
};

/// Number of layers init_model produces for the given link.
std::size_t layer_count(const channel::FiberLink& link, const ModelSpec& spec);

LdbpModel init_model(const channel::FiberLink& link, double sample_rate_hz, const ModelSpec& spec);

struct MultiObjectiveConfig {
    /// weights[w - 1] is lambda for every window of w consecutive filters; missing entries are 0.
    RVec weights{1.0};
    int max_sweeps{20};
    double tol{1e-12};
    double ridge{1e-9};
    double beta2_ps2_per_km{-21.683};
    LsFitConfig ls{};
};

struct MultiObjectiveResult {
    LdbpModel model;
    RVec objective_history; // value before the first sweep, then after each sweep
    int sweeps{0};
    bool ridge_used{false};
};

/// Weighted objective over windows of consecutive filters against their combined ideal response.
double multiobjective_value(const LdbpModel& model, const MultiObjectiveConfig& config);

/// Cyclic exact per-filter weighted LS solves of the windowed objective.
MultiObjectiveResult multiobjective_ls(const LdbpModel& model, const MultiObjectiveConfig& config);

/// Splits a symmetric filter of odd length T into (T - 1)/2 symmetric 3-tap filters whose
/// cascade reproduces it.
std::vector<CVec> factor_filter(std::span<const cplx> taps);

/// |2 pi beta2 df L f_s| in samples.
double cd_memory_taps(double beta2_ps2_per_km, double bandwidth_hz, double length_km, double sample_rate_hz);

} // namespace ldbp::init
