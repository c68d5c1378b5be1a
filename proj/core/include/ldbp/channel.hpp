#pragma once

// Forward fiber propagation: asymmetric split-step solution of the NLSE with loss,
// lumped EDFA amplification and ASE noise.

#include "ldbp/signal.hpp"

namespace ldbp::channel {

using signal::ComplexSignal;

struct FiberLink {
    double alpha_db_per_km{0.2};
    double beta2_ps2_per_km{-21.683};
    double gamma_per_w_km{1.3};
    double span_km{80.0};
    int num_spans{25};
    double noise_figure_db{5.0};
    double carrier_hz{1.946e14};

    void validate() const;
    [[nodiscard]] double alpha_neper_per_km() const { return units::db_per_km_to_neper(alpha_db_per_km); }
    [[nodiscard]] double beta2_s2_per_km() const { return units::ps2_to_s2(beta2_ps2_per_km); }
    [[nodiscard]] double total_km() const { return span_km * num_spans; }
};

/// omega_k = 2 pi f_k with f_k = k/n * fs for k < n/2 and (k - n)/n * fs otherwise (0-based).
RVec angular_frequencies(std::size_t n, double sample_rate_hz);

/// Effective nonlinear length (1 - exp(-alpha z)) / alpha in km, z for alpha = 0.
double nonlinear_length_km(double alpha_np_per_km, double z_km);

/// Linear step: exp(-alpha z / 2) exp(j beta2 omega^2 z / 2) applied per DFT bin.
ComplexSignal cd_loss_step(const ComplexSignal& x, const FiberLink& link, double z_km, bool include_loss);

/// Kerr step: x_k exp(j gamma L_eff(z) |x_k|^2).
ComplexSignal kerr_step(const ComplexSignal& x, const FiberLink& link, double z_km);

enum class StepSizing { Uniform, Logarithmic };

/// Step lengths of one span in forward (transmitter-to-receiver) order.
RVec forward_step_sizes(const FiberLink& link, int steps, StepSizing sizing);

/// One span of asymmetric SSM: kerr_step(cd_loss_step(.)) per step, loss included.
ComplexSignal span_forward(const ComplexSignal& x, const FiberLink& link, int steps, StepSizing sizing);

/// ASE power spectral density (exp(alpha L_sp) - 1) h nu n_sp in W/Hz.
double edfa_noise_psd(const FiberLink& link);

/// Gain exp(alpha L_sp / 2) in amplitude, plus white noise of variance PSD * fs per sample.
ComplexSignal edfa(const ComplexSignal& x, const FiberLink& link, std::uint64_t rng_seed, bool noiseless);

/// num_spans repetitions of span_forward + edfa; span s draws noise from derive_seed(seed, "noise-span", s).
ComplexSignal propagate_link(const ComplexSignal& x, const FiberLink& link, int steps_per_span,
                             std::uint64_t rng_seed, bool noiseless,
                             StepSizing sizing = StepSizing::Logarithmic);

} // namespace ldbp::channel
