#pragma once

// Receiver chain: brick-wall low-pass and sampling, reference equalizers, matched filter,
// genie phase correction and the effective-SNR figure of merit.

#include "ldbp/channel.hpp"

namespace ldbp::rx {

using signal::ComplexSignal;

struct RxConfig {
    double lpf_bandwidth_hz{21.4e9};
    int digital_oversampling{2};

    /// Delta B = f_s (digital rate) by default; wide = true selects 2 f_s.
    static RxConfig defaults(const signal::SignalSpec& spec, bool wide = false);
    void validate(double analog_rate_hz) const;
};

/// Zeroes DFT bins with |f| > Delta B / 2, then keeps every (rho_a / rho_d)-th sample.
ComplexSignal lowpass_downsample(const ComplexSignal& y, const RxConfig& cfg, double baud_rate_hz);

struct DbpOptions {
    bool loss_aware{true};
    bool logarithmic{true};
    double log_adjust{0.4};
};

/// Frequency-domain DBP: per step an exact CD inverse followed by the negated Kerr phase.
/// The input is assumed normalized to launch power scale (as received after the last EDFA).
ComplexSignal reference_dbp(const ComplexSignal& r, const channel::FiberLink& link, int steps_per_span,
                            const DbpOptions& opts = {});

/// Exact inverse of the accumulated CD of the whole link.
ComplexSignal cdc(const ComplexSignal& r, const channel::FiberLink& link);

/// Circular RRC matched filter and downsampling by rho_d, scaled by 1 / sqrt(P rho_d).
class MatchedFilter {
public:
    MatchedFilter(const signal::SignalSpec& spec, double power_dbm);

    [[nodiscard]] CVec apply(std::span<const cplx> u) const;
    /// Transpose of apply (the operator is real).
    [[nodiscard]] CVec adjoint(std::span<const cplx> g, std::size_t n) const;

private:
    RVec taps_;
    std::size_t os_;
    double scale_;
};

signal::SymbolFrame matched_filter_downsample(const ComplexSignal& u, const signal::SignalSpec& spec, double power_dbm);

struct PhaseCorrected {
    CVec symbols;
    double phase{0.0};
};

/// s_hat = s_tilde exp(-j phi) with phi = arg(s^H s_tilde).
PhaseCorrected phase_correct(std::span<const cplx> s_tilde, std::span<const cplx> s_ref);

double mse(std::span<const cplx> s_hat, std::span<const cplx> s);

/// SNR values at or above this are reported as capped.
inline constexpr double kSnrCapDb = 150.0;

struct SnrResult {
    double snr_db{0.0};
    bool capped{false};
};

struct FrameError {
    double error_energy{0.0};
    std::size_t num_symbols{0};
};

FrameError frame_error(std::span<const cplx> s_hat, std::span<const cplx> s);

/// N_sym times the mean inverse per-frame error energy, in dB.
SnrResult effective_snr(std::span<const FrameError> frames);

} // namespace ldbp::rx
