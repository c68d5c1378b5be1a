#pragma once

// Learned digital backpropagation: a parameterized split-step model whose linear steps are
// short symmetric FIR filters applied by circular convolution, alternated with Kerr phase
// steps (standard or ESSM-filtered) of negated sign.

#include "ldbp/signal.hpp"

namespace ldbp::model {

using signal::ComplexSignal;

/// Symmetric complex FIR filter stored by its unique half (h_0 ... h_K), T = 2K + 1.
struct LinearStep {
    CVec half_taps;
    std::vector<std::uint8_t> mask; // 1 = active; pruned taps hold exactly zero

    static LinearStep identity(int half_length);
    static LinearStep from_half_taps(CVec half);

    [[nodiscard]] int half_length() const { return static_cast<int>(half_taps.size()) - 1; }
    /// Largest active half index; pruning keeps the active set contiguous from 0.
    [[nodiscard]] int active_half_length() const;
    [[nodiscard]] int active_length() const { return 2 * active_half_length() + 1; }
    /// (h_K ... h_1, h_0, h_1 ... h_K) with masked entries zero.
    [[nodiscard]] CVec full_taps() const;
    /// Zero every masked position.
    void enforce_mask();
};

enum class NonlinearKind { Standard, Essm };

struct NonlinearStep {
    NonlinearKind kind{NonlinearKind::Standard};
    double delta_km{0.0};
    double gamma_per_w_km{0.0};
    /// Kerr length in km used for the phase, including the position-dependent span
    /// attenuation relative to launch power. Zero when delta_km is zero.
    double effective_length_km{0.0};
    /// ESSM only: eta_0 ... eta_kappa of a real symmetric filter of length 2 kappa + 1.
    RVec eta_half_taps;

    static NonlinearStep standard(double delta_km, double gamma, double effective_length_km);
    static NonlinearStep essm(double delta_km, double gamma, double effective_length_km, RVec eta_half);

    /// Phase per watt, -gamma * effective length (backpropagation sign).
    [[nodiscard]] double phase_coefficient() const { return -gamma_per_w_km * effective_length_km; }
    [[nodiscard]] bool is_identity() const { return phase_coefficient() == 0.0; }
    [[nodiscard]] int kappa() const { return static_cast<int>(eta_half_taps.size()) - 1; }
};

struct Layer {
    LinearStep linear;
    NonlinearStep nonlinear;
    /// Propagation length the filter was designed to invert (delta'_i).
    double cd_length_km{0.0};
};

enum class Layout { Asymmetric, SymmetricPlusHalf };

struct LdbpModel {
    std::vector<Layer> layers;
    Layout layout{Layout::Asymmetric};
    double sample_rate_hz{1.0};

    void validate() const;
    /// Length of the cascade impulse response, sum(T_i - 1) + 1 over active lengths.
    [[nodiscard]] int total_taps() const;
};

/// Folded direct-form circular convolution with the reconstructed symmetric filter.
CVec circular_conv_symmetric(std::span<const cplx> x, const LinearStep& step);

/// Same operator evaluated as a DFT product; used for long filters.
CVec circular_conv_symmetric_dft(std::span<const cplx> x, const LinearStep& step);

/// Kerr phase exp(j c sum_k eta_k |x_{j-k}|^2) with c = step.phase_coefficient().
CVec nonlinear_apply(std::span<const cplx> x, const NonlinearStep& step);

/// Intermediate activations kept for reverse-mode differentiation.
struct ForwardTape {
    std::vector<CVec> layer_inputs;  // x_{i-1}
    std::vector<CVec> pre_nonlinear; // A^{(i)} x_{i-1}
};

CVec forward(const LdbpModel& model, std::span<const cplx> r, ForwardTape* tape = nullptr);
ComplexSignal forward(const LdbpModel& model, const ComplexSignal& r);

/// forward with every nonlinear step replaced by the identity.
CVec linear_only_forward(const LdbpModel& model, std::span<const cplx> r);
ComplexSignal linear_only_forward(const LdbpModel& model, const ComplexSignal& r);

/// DTFT of a symmetric filter, h_0 + 2 sum_m h_m cos(m w), at the given normalized angles.
CVec symmetric_response(const LinearStep& step, std::span<const double> omegas);

struct ResponseTable {
    RVec freq_normalized; // f / f_s on [-0.5, 0.5]
    std::vector<CVec> per_step;
    CVec overall;
    int total_length{1};
};

ResponseTable overall_response(const LdbpModel& model, int num_points);

/// Model whose nonlinear steps carry scalings: phase coefficient of layer i multiplied by xi_i.
LdbpModel with_nonlinear_scalings(const LdbpModel& model, std::span<const double> scalings);

/// Absorbs per-step nonlinear scalings into the filters, returning an equivalent model with
/// unit scalings. Requires the symmetric layout with a trailing identity step.
LdbpModel rescale_equivalent(const LdbpModel& model, std::span<const double> scalings);

} // namespace ldbp::model
