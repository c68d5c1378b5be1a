#pragma once

// Transmitter side: symbol generation, RRC pulse shaping and WDM multiplexing.

#include "ldbp/common.hpp"

namespace ldbp::signal {

enum class Modulation { GaussianIid, Qam16 };

struct SymbolFrame {
    CVec symbols;
    Modulation modulation{Modulation::GaussianIid};
    double power_dbm{0.0};
    std::uint64_t seed{0};
};

struct ComplexSignal {
    CVec samples;
    double sample_rate_hz{1.0};

    [[nodiscard]] std::size_t size() const { return samples.size(); }
};

struct SignalSpec {
    double baud_rate_hz{10.7e9};
    double rolloff{0.1};
    int analog_oversampling{6};
    int digital_oversampling{2};
    int rrc_span_symbols{128};

    /// Throws ConfigError on violated invariants.
    void validate() const;
    [[nodiscard]] double analog_rate_hz() const { return baud_rate_hz * analog_oversampling; }
    [[nodiscard]] double digital_rate_hz() const { return baud_rate_hz * digital_oversampling; }
    /// Occupied bandwidth (1 + rolloff) * R_s.
    [[nodiscard]] double occupied_bandwidth_hz() const { return (1.0 + rolloff) * baud_rate_hz; }
};

SymbolFrame generate_symbols(std::size_t count, Modulation modulation, std::uint64_t seed,
                             double power_dbm = 0.0);

/// Unit-energy root-raised-cosine taps, length span * oversampling + 1, centered.
RVec rrc_taps(const SignalSpec& spec, int oversampling);

/// y_j = sum_m taps[m] x[(j - (m - center)) mod n] with center = taps.size() / 2.
/// Taps longer than the block wrap around the circle.
CVec circular_filter(std::span<const cplx> x, std::span<const double> taps);

/// Adjoint of circular_filter with the same centered real taps.
CVec circular_filter_adjoint(std::span<const cplx> y, std::span<const double> taps);

/// Pulse-shaped periodic waveform with mean sample power 10^((P_dBm - 30)/10) W.
ComplexSignal modulate(const SymbolFrame& frame, const SignalSpec& spec, int oversampling);

/// Frequency-shifts channel c by (c - center) * spacing and sums. The composite must fit
/// inside the sampling band given the per-channel occupied bandwidth.
ComplexSignal wdm_multiplex(std::span<const ComplexSignal> channels, double spacing_hz,
                            double occupied_bandwidth_hz);

} // namespace ldbp::signal
